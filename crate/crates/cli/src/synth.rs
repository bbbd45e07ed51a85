//! Synthetic cells sampled from the circuit itself, for closed-loop checks.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qscgrn::ingest::ExpressionMatrix;
use qscgrn::io::write_atomic;
use qscgrn::model::{forward, ThetaMatrix};
use qscgrn::statevec::max_qubits;
use qscgrn::train::encoder_angle;
use qscgrn::Error;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{CliError, StageExt};

/// Default half-width of the off-diagonal range for a random θ*.
pub const DEFAULT_OFF_DIAGONAL_RANGE: f64 = 0.5;

/// Range of the activation ratios behind a random θ*'s encoder angles.
pub const ACTIVATION_RANGE: (f64, f64) = (0.2, 0.8);

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSource {
    File(PathBuf),
    /// Off-diagonals uniform in `[-range, range]`.
    Random {
        range: f64,
    },
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub n: usize,
    pub m: usize,
    pub source: ThetaSource,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub theta_star: ThetaMatrix,
    pub matrix_path: PathBuf,
    pub theta_path: PathBuf,
}

/// Random θ* with encoder angles for ratios drawn from [`ACTIVATION_RANGE`]
/// and sorted in decreasing order, matching the gene order `infer` uses.
pub fn random_theta(n: usize, range: f64, rng: &mut impl Rng) -> Result<ThetaMatrix, CliError> {
    if !(range.is_finite() && range >= 0.0) {
        return Err(CliError::Usage(format!(
            "off-diagonal range {range} must be finite and non-negative"
        )));
    }
    let (lo, hi) = ACTIVATION_RANGE;
    let mut act: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    act.sort_by(|a, b| b.total_cmp(a));
    let mut theta =
        ThetaMatrix::from_diagonal(&act.iter().map(|&a| encoder_angle(a)).collect::<Vec<_>>())
            .map_err(|e| CliError::Usage(e.to_string()))?;
    for k in 0..n {
        for p in (0..n).filter(|&p| p != k) {
            theta.set(
                k,
                p,
                if range > 0.0 {
                    rng.random_range(-range..=range)
                } else {
                    0.0
                },
            );
        }
    }
    Ok(theta)
}

/// Draws `m` cell labels i.i.d. from the raw squared amplitudes of
/// `forward(theta)`, `|0..0>` included.
pub fn sample_labels(
    theta: &ThetaMatrix,
    m: usize,
    rng: &mut impl Rng,
) -> qscgrn::Result<Vec<usize>> {
    let raw = forward(theta)?.probabilities();
    let index = WeightedIndex::new(raw.as_slice()).map_err(|e| Error::Argument(e.to_string()))?;
    Ok((0..m).map(|_| index.sample(rng)).collect())
}

/// Expression matrix (0/1 values) whose gene `g{k}` row holds bit `k` of each label.
pub fn labels_to_matrix(n: usize, labels: &[usize]) -> qscgrn::Result<ExpressionMatrix> {
    let m = labels.len();
    let mut values = Vec::with_capacity(n * m);
    for k in 0..n {
        values.extend(labels.iter().map(|&x| (x >> k & 1) as f64));
    }
    ExpressionMatrix::new((0..n).map(|k| format!("g{k}")).collect(), m, values)
}

/// Writes `matrix.tsv` and `theta_star.csv` into the output directory.
///
/// One ChaCha20 stream seeded with `seed` draws θ* (when random) and then the
/// cells.
pub fn run_synth(opts: &SynthOptions) -> Result<SynthOutput, CliError> {
    if opts.n < 2 {
        return Err(CliError::Usage(format!(
            "synth needs n >= 2, got {}",
            opts.n
        )));
    }
    if opts.m < 1 {
        return Err(CliError::Usage("synth needs m >= 1".into()));
    }
    let cap = max_qubits();
    if opts.n > cap {
        return Err(Error::Capacity { n: opts.n, cap }).stage("synth");
    }
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let theta_star = match &opts.source {
        ThetaSource::File(path) => {
            let t = ThetaMatrix::read_csv(path).stage("load")?;
            if t.n() != opts.n {
                return Err(CliError::Usage(format!(
                    "{} is {}x{} but n = {}",
                    path.display(),
                    t.n(),
                    t.n(),
                    opts.n
                )));
            }
            t
        }
        ThetaSource::Random { range } => random_theta(opts.n, *range, &mut rng)?,
    };
    let labels = sample_labels(&theta_star, opts.m, &mut rng).stage("synth")?;
    let matrix = labels_to_matrix(opts.n, &labels).stage("synth")?;

    fs::create_dir_all(&opts.out_dir)
        .map_err(|e| Error::Io {
            path: opts.out_dir.clone(),
            source: e,
        })
        .stage("write")?;
    let matrix_path = opts.out_dir.join("matrix.tsv");
    let theta_path = opts.out_dir.join("theta_star.csv");
    write_matrix(&matrix, &matrix_path).stage("write")?;
    theta_star.write_csv(&theta_path).stage("write")?;
    Ok(SynthOutput {
        theta_star,
        matrix_path,
        theta_path,
    })
}

/// 0/1 TSV with genes in `g0 … g{n-1}` order, so rows line up with
/// `theta_star.csv`. `infer` re-sorts genes on load.
fn write_matrix(matrix: &ExpressionMatrix, path: &Path) -> qscgrn::Result<()> {
    let mut text = String::from("gene");
    for c in 0..matrix.m() {
        write!(text, "\tcell_{c}").unwrap();
    }
    text.push('\n');
    for (k, name) in matrix.gene_names().iter().enumerate() {
        text.push_str(name);
        for &v in matrix.row(k) {
            text.push_str(if v > 0.0 { "\t1" } else { "\t0" });
        }
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}
