//! Real-amplitude statevector simulation.
//!
//! Every gate the circuit uses (Ry, controlled Ry, CNOT and the plain rotation
//! `R(c) = Ry(2c)`) is a real orthogonal matrix, so amplitudes are stored as
//! `f64`. Qubit `k` is bit `k` of the basis index, which puts `q_0` in the
//! rightmost tensor factor.
//!
//! Gates update the amplitude vector in place by walking index pairs that
//! differ only in the target bit, with stride `2^target`.

use crate::distribution::Distribution;
use crate::error::{Error, Result};

pub mod dense;

/// Default upper bound on the register size (2^24 amplitudes, 128 MiB).
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Environment variable that overrides [`DEFAULT_MAX_QUBITS`].
pub const MAX_QUBITS_ENV: &str = "QSCGRN_MAX_QUBITS";

/// The qubit cap in effect, honouring `QSCGRN_MAX_QUBITS` when it parses.
pub fn max_qubits() -> usize {
    std::env::var(MAX_QUBITS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v >= 1 && v < usize::BITS as usize - 1)
        .unwrap_or(DEFAULT_MAX_QUBITS)
}

/// Renders basis index `index` of an `n`-qubit register as a ket, `q_{n-1}`
/// leftmost: `ket(2, 2) == "|10>"`.
pub fn ket(index: usize, n: usize) -> String {
    let mut s = String::with_capacity(n + 2);
    s.push('|');
    for k in (0..n).rev() {
        s.push(if index >> k & 1 == 1 { '1' } else { '0' });
    }
    s.push('>');
    s
}

/// A gate from the circuit's gate set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry {
        qubit: usize,
        theta: f64,
    },
    CRy {
        control: usize,
        target: usize,
        theta: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// `R(c)`, the rotation by `c` (equal to `Ry(2c)`).
    R {
        qubit: usize,
        angle: f64,
    },
}

impl Gate {
    fn check(&self, n_qubits: usize) -> Result<()> {
        let in_range = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(Error::QubitIndex { index: q, n_qubits })
            }
        };
        match *self {
            Gate::Ry { qubit, theta }
            | Gate::R {
                qubit,
                angle: theta,
            } => {
                in_range(qubit)?;
                finite(theta)
            }
            Gate::CRy {
                control,
                target,
                theta,
            } => {
                distinct(control, target)?;
                in_range(control)?;
                in_range(target)?;
                finite(theta)
            }
            Gate::Cnot { control, target } => {
                distinct(control, target)?;
                in_range(control)?;
                in_range(target)
            }
        }
    }
}

fn finite(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "rotation angle {theta} is not finite"
        )))
    }
}

fn distinct(control: usize, target: usize) -> Result<()> {
    if control == target {
        Err(Error::Argument(format!(
            "control and target are both qubit {control}"
        )))
    } else {
        Ok(())
    }
}

/// Amplitudes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<f64>,
}

impl StateVector {
    /// `|0>_n`, subject to the cap returned by [`max_qubits`].
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::zero_with_cap(n_qubits, max_qubits())
    }

    pub fn zero_with_cap(n_qubits: usize, cap: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > cap {
            return Err(Error::Capacity { n: n_qubits, cap });
        }
        let mut amplitudes = vec![0.0; 1 << n_qubits];
        amplitudes[0] = 1.0;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps an existing amplitude vector; its length must be a power of two.
    /// No normalization is applied.
    pub fn from_amplitudes(amplitudes: Vec<f64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Argument(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> f64 {
        self.amplitudes[index]
    }

    pub fn into_amplitudes(self) -> Vec<f64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Applies a gate that has already been validated against this register.
    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        match *gate {
            Gate::Ry { qubit, theta } => {
                let (s, c) = (theta * 0.5).sin_cos();
                rotate_pairs(&mut self.amplitudes, qubit, 0, c, s);
            }
            Gate::R { qubit, angle } => {
                let (s, c) = angle.sin_cos();
                rotate_pairs(&mut self.amplitudes, qubit, 0, c, s);
            }
            Gate::CRy {
                control,
                target,
                theta,
            } => {
                let (s, c) = (theta * 0.5).sin_cos();
                rotate_pairs(&mut self.amplitudes, target, 1 << control, c, s);
            }
            Gate::Cnot { control, target } => {
                swap_pairs(&mut self.amplitudes, target, 1 << control);
            }
        }
    }

    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.apply(&Gate::Ry { qubit, theta })
    }

    pub fn apply_cry(&mut self, control: usize, target: usize, theta: f64) -> Result<()> {
        self.apply(&Gate::CRy {
            control,
            target,
            theta,
        })
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.apply(&Gate::Cnot { control, target })
    }

    pub fn apply_r(&mut self, qubit: usize, angle: f64) -> Result<()> {
        self.apply(&Gate::R { qubit, angle })
    }

    /// Replaces the state by `d/dθ c-Ry(θ) |state>`.
    ///
    /// The derivative vanishes on the control-0 subspace; on the control-1
    /// subspace it equals `½·Ry(θ + π)`.
    pub(crate) fn apply_cry_derivative(&mut self, control: usize, target: usize, theta: f64) {
        let cmask = 1usize << control;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & cmask == 0 {
                *a = 0.0;
            }
        }
        let (s, c) = (theta * 0.5).sin_cos();
        // Ry(θ + π) has cos -> -sin, sin -> cos; fold in the factor ½.
        rotate_pairs(&mut self.amplitudes, target, cmask, -0.5 * s, 0.5 * c);
    }

    /// Squared amplitudes.
    pub fn probabilities(&self) -> Distribution {
        Distribution::from_vec_unchecked(
            self.n_qubits,
            self.amplitudes.iter().map(|a| a * a).collect(),
        )
    }
}

/// For every index pair `(i, j = i | 2^target)` with `i` lacking the target bit
/// and carrying every bit of `control_mask`:
/// `a_i' = c·a_i − s·a_j`, `a_j' = s·a_i + c·a_j`.
#[inline]
fn rotate_pairs(amps: &mut [f64], target: usize, control_mask: usize, c: f64, s: f64) {
    let stride = 1usize << target;
    for base in (0..amps.len()).step_by(stride << 1) {
        for i in base..base + stride {
            if i & control_mask != control_mask {
                continue;
            }
            let j = i + stride;
            let (x, y) = (amps[i], amps[j]);
            amps[i] = c * x - s * y;
            amps[j] = s * x + c * y;
        }
    }
}

#[inline]
fn swap_pairs(amps: &mut [f64], target: usize, control_mask: usize) {
    let stride = 1usize << target;
    for base in (0..amps.len()).step_by(stride << 1) {
        for i in base..base + stride {
            if i & control_mask == control_mask {
                amps.swap(i, i + stride);
            }
        }
    }
}
