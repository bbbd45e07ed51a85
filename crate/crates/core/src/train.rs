//! Initialization, smoothing, the loss and error metrics, and the gradient
//! descent loop.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic};
use crate::model::{Objective, ThetaMatrix};

/// How the off-diagonal (regulation) parameters start out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitStrategy {
    #[default]
    AllZeros,
    Uniform {
        low: f64,
        high: f64,
        seed: u64,
    },
    Normal {
        mean: f64,
        sd: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// `None` means `2^n × 10⁻⁶`.
    pub loss_threshold: Option<f64>,
    pub alpha: f64,
    pub init_strategy: InitStrategy,
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            max_iterations: 50_000,
            loss_threshold: None,
            alpha: 1.0,
            init_strategy: InitStrategy::AllZeros,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Argument(format!(
                "smoothing alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        if self.log_every == 0 {
            return Err(Error::Argument("log_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn threshold_for(&self, n: usize) -> f64 {
        self.loss_threshold
            .unwrap_or_else(|| default_loss_threshold(n))
    }
}

/// `2^n × 10⁻⁶`.
pub fn default_loss_threshold(n: usize) -> f64 {
    (1u64 << n) as f64 * 1e-6
}

/// Encoder angle that makes `P(q = 1) = ratio` after the encoder layer.
pub fn encoder_angle(ratio: f64) -> f64 {
    2.0 * ratio.sqrt().asin()
}

/// Genes whose activation ratio is exactly 0 or 1.
pub fn saturated_genes(activation_ratios: &[f64]) -> Vec<usize> {
    activation_ratios
        .iter()
        .enumerate()
        .filter(|(_, &a)| a == 0.0 || a == 1.0)
        .map(|(k, _)| k)
        .collect()
}

/// Diagonal from the activation ratios, off-diagonal from `strategy`.
pub fn init_theta(activation_ratios: &[f64], strategy: InitStrategy) -> Result<ThetaMatrix> {
    if let Some(a) = activation_ratios.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::Argument(format!(
            "activation ratio {a} outside [0, 1]"
        )));
    }
    for k in saturated_genes(activation_ratios) {
        log::warn!(
            "gene {k} has activation ratio {}; its qubit is deterministic after the encoder",
            activation_ratios[k]
        );
    }
    let diagonal: Vec<f64> = activation_ratios
        .iter()
        .map(|&a| encoder_angle(a))
        .collect();
    let mut theta = ThetaMatrix::from_diagonal(&diagonal)?;
    let n = theta.n();
    let mut draw: Box<dyn FnMut() -> f64> = match strategy {
        InitStrategy::AllZeros => return Ok(theta),
        InitStrategy::Uniform { low, high, seed } => {
            let dist = Uniform::new(low, high).map_err(|e| Error::Argument(e.to_string()))?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            Box::new(move || dist.sample(&mut rng))
        }
        InitStrategy::Normal { mean, sd, seed } => {
            let dist = Normal::new(mean, sd).map_err(|e| Error::Argument(e.to_string()))?;
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            Box::new(move || dist.sample(&mut rng))
        }
    };
    for k in 0..n {
        for p in (0..n).filter(|&p| p != k) {
            theta.set(k, p, draw());
        }
    }
    Ok(theta)
}

/// Laplace smoothing with occurrence counts `m·p(x)`:
/// `p̂(x) = (m·p(x) + α) / (m + 2^n·α)`.
pub fn smooth(p: &Distribution, m: u64, alpha: f64) -> Result<Distribution> {
    if m == 0 {
        return Err(Error::Argument("cell count m must be at least 1".into()));
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Argument(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        if p.as_slice().contains(&0.0) {
            log::warn!(
                "smoothing with alpha = 0 leaves zero entries; the KL loss is undefined there"
            );
        }
        return Ok(p.clone());
    }
    let m = m as f64;
    let denom = m + p.len() as f64 * alpha;
    Distribution::new(
        p.n_qubits(),
        p.as_slice()
            .iter()
            .map(|&x| (m * x + alpha) / denom)
            .collect(),
    )
}

/// `Σ_x q(x)·ln(q(x)/r(x))`, natural logarithm.
pub fn kl_loss(q: &Distribution, r: &Distribution) -> Result<f64> {
    q.same_len(r)?;
    let mut total = 0.0;
    for (x, (&a, &b)) in q.as_slice().iter().zip(r.as_slice()).enumerate() {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!(
                "KL loss needs strictly positive entries, state {x} has {a} and {b}"
            )));
        }
        total += a * (a / b).ln();
    }
    Ok(total)
}

/// `Σ_x (p(x) − q(x))²`.
pub fn sq_error(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.same_len(q)?;
    Ok(p.as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub loss: f64,
    pub error: f64,
    pub theta: ThetaMatrix,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
}

impl TrainHistory {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn push(&mut self, record: HistoryRecord) {
        if self
            .records
            .last()
            .is_some_and(|r| r.iteration >= record.iteration)
        {
            return;
        }
        self.records.push(record);
    }

    /// `iteration,loss,error,theta_0_0,…` with `n²` theta columns, row-major.
    pub fn to_csv_string(&self, n: usize) -> String {
        let mut out = String::from("iteration,loss,error");
        for k in 0..n {
            for p in 0..n {
                write!(out, ",theta_{k}_{p}").unwrap();
            }
        }
        out.push('\n');
        for r in &self.records {
            write!(
                out,
                "{},{},{}",
                r.iteration,
                fmt_f64(r.loss),
                fmt_f64(r.error)
            )
            .unwrap();
            for v in r.theta.as_slice() {
                write!(out, ",{}", fmt_f64(*v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, n: usize) -> Result<()> {
        write_atomic(path, self.to_csv_string(n).as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The loss fell below the threshold at this iteration.
    Converged {
        iteration: usize,
    },
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub theta: ThetaMatrix,
    pub history: TrainHistory,
    pub stop: StopReason,
    /// Loss and error at the returned `theta`.
    pub final_loss: f64,
    pub final_error: f64,
    /// Number of parameter updates performed.
    pub iterations: usize,
}

/// Plain gradient descent on the off-diagonal entries of `theta_init`.
///
/// The loss at iteration `t` is measured before the `t`-th update. The loop
/// ends as soon as it drops below the threshold, or after `max_iterations`
/// updates. Iteration 0, every `log_every`-th iteration and the final point
/// are recorded in the history; a zero-iteration run records nothing.
pub fn optimize(
    objective: &Objective,
    config: &TrainConfig,
    theta_init: &ThetaMatrix,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = theta_init.n();
    let threshold = config.threshold_for(n);
    let mut theta = theta_init.clone();
    let mut history = TrainHistory::default();

    if config.max_iterations == 0 {
        let eval = objective.evaluate(&theta)?;
        return Ok(TrainOutcome {
            theta,
            history,
            stop: StopReason::MaxIterations,
            final_loss: eval.loss,
            final_error: eval.error,
            iterations: 0,
        });
    }

    let mut t = 0;
    loop {
        let eval = objective.evaluate(&theta)?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                what: "loss",
            });
        }
        if eval.gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged {
                iteration: t,
                what: "gradient",
            });
        }
        let converged = eval.loss < threshold;
        if converged || t == config.max_iterations || t % config.log_every == 0 {
            history.push(HistoryRecord {
                iteration: t,
                loss: eval.loss,
                error: eval.error,
                theta: theta.clone(),
            });
        }
        if converged || t == config.max_iterations {
            let stop = if converged {
                StopReason::Converged { iteration: t }
            } else {
                StopReason::MaxIterations
            };
            return Ok(TrainOutcome {
                theta,
                history,
                stop,
                final_loss: eval.loss,
                final_error: eval.error,
                iterations: t,
            });
        }
        for (k, p, _) in theta_init.off_diagonal() {
            let next = theta.get(k, p) - config.learning_rate * eval.gradient[k * n + p];
            if !next.is_finite() {
                return Err(Error::Diverged {
                    iteration: t,
                    what: "theta",
                });
            }
            theta.set(k, p, next);
        }
        t += 1;
    }
}
