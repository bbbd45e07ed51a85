use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use qscgrn::grn::{prune, score_against_baseline, to_network, BaselineGrn, ExportFormat};
use qscgrn::ingest::{binarize, load_matrix, observed_distribution, MatrixFormat};
use qscgrn::io::{fmt_f64, write_atomic};
use qscgrn::model::{output_distribution, Objective};
use qscgrn::statevec::{ket, max_qubits};
use qscgrn::train::{init_theta, optimize, smooth, StopReason};
use qscgrn::Error;

use crate::config::Settings;
use crate::error::{CliError, StageExt};
use crate::manifest::{sha256_file, RunManifest};

#[derive(Debug, Clone)]
pub struct InferOptions {
    pub input: PathBuf,
    /// Guessed from the extension when absent.
    pub format: Option<MatrixFormat>,
    pub genes: Option<Vec<String>>,
    pub settings: Settings,
    pub out_dir: PathBuf,
    pub exports: Vec<ExportFormat>,
    pub baseline: Option<PathBuf>,
}

impl InferOptions {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            format: None,
            genes: None,
            settings: Settings::default(),
            out_dir: out_dir.into(),
            exports: vec![ExportFormat::Dot, ExportFormat::Json],
            baseline: None,
        }
    }
}

fn format_name(f: MatrixFormat) -> &'static str {
    match f {
        MatrixFormat::Tsv => "tsv",
        MatrixFormat::Csv => "csv",
    }
}

/// load → binarize → observe → init → optimize → prune → export.
pub fn run_infer(opts: &InferOptions) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let config = opts.settings.train_config()?;
    let prune_threshold = opts.settings.prune_threshold();
    if prune_threshold.is_nan() || prune_threshold < 0.0 {
        return Err(CliError::Usage(format!(
            "prune threshold {prune_threshold} must be non-negative"
        )));
    }

    let format = opts
        .format
        .unwrap_or_else(|| MatrixFormat::from_path(&opts.input));
    let input_sha256 = sha256_file(&opts.input)?;
    let mut matrix = load_matrix(&opts.input, format).stage("load")?;
    if let Some(genes) = &opts.genes {
        matrix = matrix.select_genes(genes).stage("load")?;
    }
    let cap = max_qubits();
    if matrix.n() > cap {
        return Err(Error::Capacity { n: matrix.n(), cap }).stage("load");
    }

    let xb = binarize(&matrix);
    let observed = observed_distribution(&xb).stage("observe")?;
    let theta0 = init_theta(xb.activation_ratios(), config.init_strategy).stage("init")?;
    let objective = Objective::new(observed.distribution.clone(), observed.m, config.alpha)
        .stage("optimize")?;
    let outcome = optimize(&objective, &config, &theta0).stage("optimize")?;

    let genes = xb.gene_names().to_vec();
    let adjacency = prune(&outcome.theta, prune_threshold);
    let network = to_network(&adjacency, &genes).stage("network")?;

    fs::create_dir_all(&opts.out_dir)
        .map_err(|e| Error::Io {
            path: opts.out_dir.clone(),
            source: e,
        })
        .stage("write")?;
    let out = |name: &str| opts.out_dir.join(name);
    let mut outputs = Vec::new();
    let mut emit = |path: PathBuf, bytes: &[u8]| -> Result<(), CliError> {
        write_atomic(&path, bytes).stage("write")?;
        outputs.push(path);
        Ok(())
    };

    let n = xb.n();
    emit(out("theta.csv"), outcome.theta.to_csv_string().as_bytes())?;
    emit(
        out("history.csv"),
        outcome.history.to_csv_string(n).as_bytes(),
    )?;
    emit(out("genes.txt"), (genes.join("\n") + "\n").as_bytes())?;
    emit(
        out("adjacency.csv"),
        adjacency.to_csv_string(&genes).as_bytes(),
    )?;
    for &f in &opts.exports {
        let name = format!("network.{}", f.extension());
        // The adjacency CSV is already written under its own name.
        let name = if f == ExportFormat::Csv {
            "network_adjacency.csv".to_string()
        } else {
            name
        };
        emit(out(&name), network.render(f).stage("write")?.as_bytes())?;
    }
    let p_out = output_distribution(&outcome.theta).stage("optimize")?;
    emit(
        out("distributions.csv"),
        distributions_csv(
            n,
            &observed.counts,
            objective.p_obs(),
            objective.p_obs_smoothed(),
            &p_out,
            observed.m,
            config.alpha,
        )
        .stage("write")?
        .as_bytes(),
    )?;

    if let Some(path) = &opts.baseline {
        let baseline = BaselineGrn::read_csv(path).stage("score")?;
        let score = score_against_baseline(&network, &baseline).stage("score")?;
        let text = serde_json::to_string_pretty(&score)
            .map_err(Error::from)
            .stage("score")?
            + "\n";
        emit(out("score.json"), text.as_bytes())?;
    }

    let manifest_path = out("manifest.json");
    outputs.push(manifest_path.clone());
    let manifest = RunManifest {
        tool: "qscgrn".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "infer".into(),
        input: opts.input.clone(),
        input_sha256,
        format: format_name(format).into(),
        genes: opts.genes.clone(),
        exports: opts
            .exports
            .iter()
            .map(|f| f.extension().to_string())
            .collect(),
        baseline: opts.baseline.clone(),
        settings: opts.settings.clone(),
        train_config: config,
        prune_threshold,
        seed: opts.settings.seed,
        gene_order: genes,
        n_genes: n,
        n_cells: xb.m(),
        stop: outcome.stop,
        iterations: outcome.iterations,
        final_loss: outcome.final_loss,
        final_error: outcome.final_error,
        outputs,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    manifest.write(&manifest_path)?;
    match manifest.stop {
        StopReason::Converged { iteration } => log::info!("converged at iteration {iteration}"),
        StopReason::MaxIterations => log::info!("stopped after {} iterations", manifest.iterations),
    }
    Ok(manifest)
}

fn distributions_csv(
    n: usize,
    counts: &[u64],
    p_obs: &qscgrn::Distribution,
    p_obs_hat: &qscgrn::Distribution,
    p_out: &qscgrn::Distribution,
    m: u64,
    alpha: f64,
) -> qscgrn::Result<String> {
    let p_out_hat = smooth(p_out, m, alpha)?;
    let mut s = String::from("index,ket,count,p_obs,p_out,p_obs_smoothed,p_out_smoothed\n");
    for (x, count) in counts.iter().enumerate() {
        writeln!(
            s,
            "{x},{},{count},{},{},{},{}",
            ket(x, n),
            fmt_f64(p_obs.as_slice()[x]),
            fmt_f64(p_out.as_slice()[x]),
            fmt_f64(p_obs_hat.as_slice()[x]),
            fmt_f64(p_out_hat.as_slice()[x]),
        )
        .unwrap();
    }
    Ok(s)
}

/// Re-runs the `infer` recorded in a manifest, writing into `out_dir`.
///
/// Refuses to run when the input file no longer matches the recorded hash.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> Result<RunManifest, CliError> {
    let m = RunManifest::read(manifest_path)?;
    if m.command != "infer" {
        return Err(CliError::Usage(format!(
            "cannot replay command {:?}",
            m.command
        )));
    }
    let digest = sha256_file(&m.input)?;
    if digest != m.input_sha256 {
        return Err(Error::Argument(format!(
            "{} changed since the recorded run (sha256 {digest}, expected {})",
            m.input.display(),
            m.input_sha256
        )))
        .stage("load");
    }
    let opts = InferOptions {
        input: m.input.clone(),
        format: Some(
            m.format
                .parse()
                .map_err(|e: Error| CliError::Usage(e.to_string()))?,
        ),
        genes: m.genes.clone(),
        settings: m.settings.clone(),
        out_dir: out_dir.to_path_buf(),
        exports: m
            .exports
            .iter()
            .map(|e| e.parse())
            .collect::<Result<_, Error>>()
            .map_err(|e| CliError::Usage(e.to_string()))?,
        baseline: m.baseline.clone(),
    };
    run_infer(&opts)
}
