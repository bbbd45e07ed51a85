//! The regulatory circuit: an encoder layer of one Ry per qubit followed by
//! regulation layers `L_0 … L_{n-1}`, where `L_k` holds a controlled Ry from
//! qubit `k` onto every other qubit.
//!
//! Parameters live in a [`ThetaMatrix`]: the diagonal feeds the encoder, entry
//! `(k, p)` drives the gate with control `k` and target `p`.

use std::fmt::Write as _;
use std::path::Path;

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic};
use crate::statevec::{max_qubits, Gate, StateVector};
use crate::train::{kl_loss, smooth, sq_error};

/// Square parameter matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl ThetaMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Argument(format!(
                "a theta matrix needs at least 2 genes, got {n}"
            )));
        }
        if entries.len() != n * n {
            return Err(Error::LengthMismatch {
                left: entries.len(),
                right: n * n,
            });
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "theta[{}][{}] = {} is not finite",
                i / n,
                i % n,
                entries[i]
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n * n])
    }

    /// Diagonal-only matrix.
    pub fn from_diagonal(diagonal: &[f64]) -> Result<Self> {
        let n = diagonal.len();
        let mut entries = vec![0.0; n * n];
        for (k, &d) in diagonal.iter().enumerate() {
            entries[k * n + k] = d;
        }
        Self::new(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, control: usize, target: usize) -> f64 {
        self.entries[control * self.n + target]
    }

    /// Panics on a non-finite value.
    pub fn set(&mut self, control: usize, target: usize, value: f64) {
        assert!(value.is_finite(), "theta entries must be finite");
        self.entries[control * self.n + target] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.get(k, k)).collect()
    }

    /// `(control, target, value)` for every off-diagonal entry, row-major.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |k| (0..n).map(move |p| (k, p)))
            .filter(|(k, p)| k != p)
            .map(|(k, p)| (k, p, self.get(k, p)))
    }

    /// `n` lines of `n` comma-separated values, 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for k in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|p| fmt_f64(self.get(k, p))).collect();
            writeln!(out, "{}", row.join(",")).unwrap();
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv_string().as_bytes())
    }

    pub fn parse_csv(text: &str, origin: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i as u64 + 1;
            let row = line
                .split(',')
                .enumerate()
                .map(|(col, tok)| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        Error::parse(
                            origin,
                            lineno,
                            format!("column {}: {tok:?} is not a number", col + 1),
                        )
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::parse(
                origin,
                i as u64 + 1,
                format!("expected {n} columns, found {}", r.len()),
            ));
        }
        Self::new(n, rows.concat()).map_err(|e| Error::parse(origin, 0, e.to_string()))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text, &path.display().to_string())
    }
}

/// A gate of the circuit with the theta entry it reads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedGate {
    pub gate: Gate,
    pub control: usize,
    pub target: usize,
}

impl PlannedGate {
    /// Encoder gates sit on the diagonal and are never trained.
    pub fn is_trainable(&self) -> bool {
        self.control != self.target
    }
}

/// Ordered gate list: encoder first, then `L_0, L_1, …, L_{n-1}`, each layer
/// visiting targets in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitPlan {
    n: usize,
    gates: Vec<PlannedGate>,
}

impl CircuitPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[PlannedGate] {
        &self.gates
    }

    /// One parameter per gate, `n²` in total.
    pub fn parameter_count(&self) -> usize {
        self.gates.len()
    }

    fn run(&self) -> Result<StateVector> {
        let mut state = StateVector::zero_with_cap(self.n, max_qubits())?;
        for g in &self.gates {
            state.apply_unchecked(&g.gate);
        }
        Ok(state)
    }
}

pub fn build_plan(theta: &ThetaMatrix) -> CircuitPlan {
    let n = theta.n();
    let mut gates = Vec::with_capacity(n * n);
    for k in 0..n {
        gates.push(PlannedGate {
            gate: Gate::Ry {
                qubit: k,
                theta: theta.get(k, k),
            },
            control: k,
            target: k,
        });
    }
    for k in 0..n {
        for p in (0..n).filter(|&p| p != k) {
            gates.push(PlannedGate {
                gate: Gate::CRy {
                    control: k,
                    target: p,
                    theta: theta.get(k, p),
                },
                control: k,
                target: p,
            });
        }
    }
    CircuitPlan { n, gates }
}

/// Output state `L_{n-1} ⋯ L_0 L_enc |0>_n`.
pub fn forward(theta: &ThetaMatrix) -> Result<StateVector> {
    build_plan(theta).run()
}

/// Squared amplitudes of the output state with `|0..0>` removed and the rest
/// rescaled to one.
pub fn output_distribution(theta: &ThetaMatrix) -> Result<Distribution> {
    forward(theta)?.probabilities().zero_and_rescale()
}

/// Loss, error and gradient at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// KL divergence between the smoothed output and observed distributions.
    pub loss: f64,
    /// Sum of squared differences between the unsmoothed distributions.
    pub error: f64,
    /// `∂loss/∂θ`, `n × n` row-major; the diagonal is exactly zero.
    pub gradient: Vec<f64>,
}

/// The training objective for a fixed observed distribution.
///
/// Both distributions are smoothed with occurrence counts `m·p`, so the
/// smoothed observation is computed once here.
#[derive(Debug, Clone)]
pub struct Objective {
    p_obs: Distribution,
    p_obs_hat: Distribution,
    m: u64,
    alpha: f64,
}

impl Objective {
    pub fn new(p_obs: Distribution, m: u64, alpha: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("cell count m must be at least 1".into()));
        }
        if p_obs.as_slice()[0] != 0.0 {
            return Err(Error::Argument(
                "observed distribution must have zero mass on |0..0>".into(),
            ));
        }
        if (p_obs.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "observed distribution sums to {}",
                p_obs.sum()
            )));
        }
        let p_obs_hat = smooth(&p_obs, m, alpha)?;
        Ok(Self {
            p_obs,
            p_obs_hat,
            m,
            alpha,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.p_obs.n_qubits()
    }

    pub fn p_obs(&self) -> &Distribution {
        &self.p_obs
    }

    pub fn p_obs_smoothed(&self) -> &Distribution {
        &self.p_obs_hat
    }

    fn check_theta(&self, theta: &ThetaMatrix) -> Result<()> {
        if theta.n() != self.n_qubits() {
            return Err(Error::LengthMismatch {
                left: theta.n(),
                right: self.n_qubits(),
            });
        }
        Ok(())
    }

    /// Loss alone, without the sensitivity passes.
    pub fn loss(&self, theta: &ThetaMatrix) -> Result<f64> {
        self.check_theta(theta)?;
        let p_out = output_distribution(theta)?;
        kl_loss(&smooth(&p_out, self.m, self.alpha)?, &self.p_obs_hat)
    }

    /// Loss, error and analytic gradient by forward sensitivity.
    ///
    /// Each trainable gate contributes one derivative state: the prefix state
    /// at that gate, hit with the gate's derivative, then pushed through the
    /// remaining gates. The chain back from the loss is
    /// amplitudes → squared → zero-and-rescale → smoothing → KL.
    pub fn evaluate(&self, theta: &ThetaMatrix) -> Result<Evaluation> {
        self.check_theta(theta)?;
        let n = theta.n();
        let plan = build_plan(theta);
        let psi = plan.run()?;
        let amps = psi.amplitudes();

        let raw = psi.probabilities();
        let p_out = raw.zero_and_rescale()?;
        let rest: f64 = raw.as_slice()[1..].iter().sum();
        let q = smooth(&p_out, self.m, self.alpha)?;
        let r = &self.p_obs_hat;
        let loss = kl_loss(&q, r)?;
        let error = sq_error(&p_out, &self.p_obs)?;

        // ∂L/∂p_out(y) = s·ln(q/r); Σ dq = 0 removes the constant term of the
        // KL derivative.
        let dim = amps.len();
        let scale = self.m as f64 / (self.m as f64 + dim as f64 * self.alpha);
        let u: Vec<f64> = (0..dim)
            .map(|y| {
                if y == 0 {
                    0.0
                } else {
                    scale * (q.as_slice()[y] / r.as_slice()[y]).ln()
                }
            })
            .collect();
        let u_bar: f64 = u.iter().zip(p_out.as_slice()).map(|(a, b)| a * b).sum();
        // ∂L/∂a(y) = 2·a(y)·∂L/∂p_raw(y)
        let weight: Vec<f64> = (0..dim)
            .map(|y| {
                if y == 0 {
                    0.0
                } else {
                    2.0 * amps[y] * (u[y] - u_bar) / rest
                }
            })
            .collect();

        let mut gradient = vec![0.0; n * n];
        let mut prefix = StateVector::zero_with_cap(n, max_qubits())?;
        let gates = plan.gates();
        for (j, g) in gates.iter().enumerate() {
            if g.is_trainable() {
                let mut d = prefix.clone();
                d.apply_cry_derivative(g.control, g.target, theta.get(g.control, g.target));
                for later in &gates[j + 1..] {
                    d.apply_unchecked(&later.gate);
                }
                gradient[g.control * n + g.target] =
                    d.amplitudes().iter().zip(&weight).map(|(a, w)| a * w).sum();
            }
            prefix.apply_unchecked(&g.gate);
        }

        Ok(Evaluation {
            loss,
            error,
            gradient,
        })
    }
}

/// `∂L/∂θ` for the smoothed KL loss, diagonal forced to zero.
pub fn loss_gradient(
    theta: &ThetaMatrix,
    p_obs: &Distribution,
    m: u64,
    alpha: f64,
) -> Result<Vec<f64>> {
    Ok(Objective::new(p_obs.clone(), m, alpha)?
        .evaluate(theta)?
        .gradient)
}
