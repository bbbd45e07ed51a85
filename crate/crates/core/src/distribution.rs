use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic};
use crate::statevec::ket;

/// Probabilities over the `2^n` basis states of an `n`-qubit register.
///
/// Entry `x` belongs to basis state `|x>`, bit `k` of `x` being qubit `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n_qubits: usize,
    probs: Vec<f64>,
}

impl Distribution {
    /// Checks length, finiteness and non-negativity. Normalization is not
    /// enforced so intermediate raw tallies can be represented.
    pub fn new(n_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1usize << n_qubits {
            return Err(Error::LengthMismatch {
                left: probs.len(),
                right: 1 << n_qubits,
            });
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::Domain(format!("entry {i} is {p}")));
        }
        Ok(Self { n_qubits, probs })
    }

    pub(crate) fn from_vec_unchecked(n_qubits: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), 1 << n_qubits);
        Self { n_qubits, probs }
    }

    /// Uniform distribution, used mainly in tests.
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self::from_vec_unchecked(n_qubits, vec![1.0 / dim as f64; dim])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total variation distance, `½ Σ |p − q|`.
    pub fn total_variation(&self, other: &Distribution) -> Result<f64> {
        self.same_len(other)?;
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    pub(crate) fn same_len(&self, other: &Distribution) -> Result<()> {
        if self.len() != other.len() {
            Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Sets the `|0..0>` entry to zero and rescales the rest to sum to one.
    ///
    /// Fails when the remaining mass is not positive.
    pub fn zero_and_rescale(&self) -> Result<Distribution> {
        let rest: f64 = self.probs[1..].iter().sum();
        if rest.is_nan() || rest <= f64::EPSILON * self.sum().max(1.0) {
            return Err(Error::DegenerateOutput {
                p_zero: self.probs[0],
            });
        }
        let mut probs = Vec::with_capacity(self.len());
        probs.push(0.0);
        probs.extend(self.probs[1..].iter().map(|p| p / rest));
        Ok(Self::from_vec_unchecked(self.n_qubits, probs))
    }

    /// CSV with columns `index,ket,probability`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "index,ket,probability").unwrap();
        for (i, p) in self.probs.iter().enumerate() {
            writeln!(buf, "{i},{},{}", ket(i, self.n_qubits), fmt_f64(*p)).unwrap();
        }
        write_atomic(path, &buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescale_forced_arithmetic() {
        let d = Distribution::new(2, vec![0.5, 0.25, 0.25, 0.0]).unwrap();
        assert_eq!(
            d.zero_and_rescale().unwrap().as_slice(),
            &[0.0, 0.5, 0.5, 0.0]
        );
    }

    #[test]
    fn rescale_without_zero_mass_is_identity() {
        let d = Distribution::new(1, vec![0.0, 1.0]).unwrap();
        assert_eq!(d.zero_and_rescale().unwrap(), d);
    }

    #[test]
    fn rescale_point_mass_at_zero_fails() {
        let d = Distribution::new(2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            d.zero_and_rescale(),
            Err(Error::DegenerateOutput { .. })
        ));
    }

    #[test]
    fn new_validates() {
        assert!(Distribution::new(2, vec![0.5, 0.5]).is_err());
        assert!(Distribution::new(1, vec![-0.1, 1.1]).is_err());
        assert!(Distribution::new(1, vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        Distribution::new(1, vec![0.25, 0.75])
            .unwrap()
            .write_csv(&path)
            .unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,ket,probability");
        assert!(lines[2].starts_with("1,|1>,7.5"));
    }
}
