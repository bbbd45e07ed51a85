use std::fmt::Write as _;
use std::path::Path;

use qscgrn::io::{fmt_f64, write_atomic};
use qscgrn::model::{forward, Objective, ThetaMatrix};
use qscgrn::statevec::ket;
use qscgrn::{Distribution, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{CliError, StageExt};

pub const GRADCHECK_MAX_QUBITS: usize = 6;
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// Cell count used to smooth the random observed distribution.
const GRADCHECK_CELLS: u64 = 1000;

/// Below this magnitude an entry is compared by absolute error.
const SMALL_GRADIENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub n: usize,
    pub seed: u64,
    pub h: f64,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= GRADCHECK_TOLERANCE
    }
}

/// Random θ and observed distribution for seed `seed`.
pub fn random_instance(n: usize, seed: u64) -> qscgrn::Result<(ThetaMatrix, Distribution)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let entries: Vec<f64> = (0..n * n)
        .map(|i| {
            if i / n == i % n {
                rng.random_range(0.3..2.8)
            } else {
                rng.random_range(-1.5..1.5)
            }
        })
        .collect();
    let theta = ThetaMatrix::new(n, entries)?;
    let mut w: Vec<f64> = (0..1usize << n)
        .map(|_| rng.random_range(0.05..1.0))
        .collect();
    w[0] = 0.0;
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok((theta, Distribution::new(n, w)?))
}

/// Compares the analytic gradient with central differences of the loss.
pub fn run_gradcheck(n: usize, seed: u64, h: f64) -> Result<GradcheckReport, CliError> {
    if !(2..=GRADCHECK_MAX_QUBITS).contains(&n) {
        return Err(CliError::Usage(format!(
            "gradcheck needs 2 <= n <= {GRADCHECK_MAX_QUBITS}, got {n}"
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(CliError::Usage(format!("step h = {h} must be positive")));
    }
    let (theta, p_obs) = random_instance(n, seed).stage("gradcheck")?;
    let objective = Objective::new(p_obs, GRADCHECK_CELLS, 1.0).stage("gradcheck")?;
    let analytic = objective.evaluate(&theta).stage("gradcheck")?.gradient;

    let mut numeric = vec![0.0; n * n];
    let (mut max_rel, mut max_abs) = (0.0f64, 0.0f64);
    for (k, p, v) in theta.off_diagonal() {
        let at = |x: f64| -> qscgrn::Result<f64> {
            let mut t = theta.clone();
            t.set(k, p, x);
            objective.loss(&t)
        };
        let fd = (at(v + h).stage("gradcheck")? - at(v - h).stage("gradcheck")?) / (2.0 * h);
        let a = analytic[k * n + p];
        numeric[k * n + p] = fd;
        let abs = (a - fd).abs();
        max_abs = max_abs.max(abs);
        let scale = a.abs().max(fd.abs());
        if scale >= SMALL_GRADIENT {
            max_rel = max_rel.max(abs / scale);
        }
    }
    if !(max_rel.is_finite() && max_abs.is_finite()) {
        return Err(Error::Diverged {
            iteration: 0,
            what: "finite-difference gradient",
        })
        .stage("gradcheck");
    }
    Ok(GradcheckReport {
        n,
        seed,
        h,
        analytic,
        numeric,
        max_relative_error: max_rel,
        max_absolute_error: max_abs,
    })
}

/// Raw squared amplitudes and the rescaled output distribution of `theta`,
/// one row per basis state.
///
/// When the output is all `|0..0>` the file is written with only the raw
/// column and the degenerate-output error is returned.
pub fn run_simulate(theta_path: &Path, out: &Path) -> Result<Distribution, CliError> {
    let theta = ThetaMatrix::read_csv(theta_path).stage("load")?;
    let n = theta.n();
    let raw = forward(&theta).stage("simulate")?.probabilities();
    let p_out = raw.zero_and_rescale();

    let mut text = String::from(if p_out.is_ok() {
        "index,ket,raw,p_out\n"
    } else {
        "index,ket,raw\n"
    });
    for x in 0..1usize << n {
        write!(text, "{x},{},{}", ket(x, n), fmt_f64(raw.as_slice()[x])).unwrap();
        if let Ok(p) = &p_out {
            write!(text, ",{}", fmt_f64(p.as_slice()[x])).unwrap();
        }
        text.push('\n');
    }
    write_atomic(out, text.as_bytes()).stage("write")?;
    p_out.stage("simulate")
}
