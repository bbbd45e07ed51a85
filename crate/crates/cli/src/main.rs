use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qscgrn::grn::ExportFormat;
use qscgrn::ingest::MatrixFormat;
use qscgrn_cli::check::GRADCHECK_TOLERANCE;
use qscgrn_cli::synth::DEFAULT_OFF_DIAGONAL_RANGE;
use qscgrn_cli::{
    replay, run_gradcheck, run_infer, run_simulate, run_synth, CliError, InferOptions, InitKind,
    Settings, SynthOptions, ThetaSource,
};

#[derive(Parser)]
#[command(
    name = "qscgrn",
    version,
    about = "Gene regulatory network inference with a simulated quantum circuit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the circuit to an expression matrix and export the network.
    Infer(InferArgs),
    /// Sample a 0/1 matrix from a known parameter matrix.
    Synth(SynthArgs),
    /// Compare the analytic gradient with finite differences.
    Gradcheck(GradcheckArgs),
    /// Write the output distribution of a parameter matrix.
    Simulate(SimulateArgs),
    /// Repeat an `infer` run from its manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct InferArgs {
    /// Genes × cells expression matrix.
    #[arg(long)]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_matrix_format)]
    format: Option<MatrixFormat>,
    /// Comma-separated subset of genes to model.
    #[arg(long, value_delimiter = ',')]
    genes: Option<Vec<String>>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Network formats to write (dot, graphml, json, csv).
    #[arg(long, value_delimiter = ',', default_value = "dot,json", value_parser = parse_export_format)]
    export: Vec<ExportFormat>,
    /// Baseline edge list (source,target,sign) to score against.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Args)]
struct SettingsArgs {
    #[arg(long, visible_alias = "max-iters")]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Laplace smoothing pseudo-count.
    #[arg(long)]
    alpha: Option<f64>,
    /// Stop once the loss falls below this value (default 2^n·1e-6).
    #[arg(long)]
    threshold: Option<f64>,
    /// Off-diagonal entries with smaller magnitude are dropped from the network.
    #[arg(long)]
    prune: Option<f64>,
    #[arg(long, value_enum)]
    init: Option<InitKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    log_every: Option<usize>,
}

impl SettingsArgs {
    fn to_settings(&self) -> Settings {
        Settings {
            learning_rate: self.lr,
            max_iterations: self.iters,
            loss_threshold: self.threshold,
            alpha: self.alpha,
            log_every: self.log_every,
            prune: self.prune,
            init: self.init,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Ground-truth parameter matrix; drawn at random when omitted.
    #[arg(long)]
    theta: Option<PathBuf>,
    /// Half-width of the off-diagonal range for a random matrix.
    #[arg(long, default_value_t = DEFAULT_OFF_DIAGONAL_RANGE)]
    range: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "synth")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    theta: PathBuf,
    #[arg(long, default_value = "distributions.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_matrix_format(s: &str) -> Result<MatrixFormat, String> {
    s.parse().map_err(|e: qscgrn::Error| e.to_string())
}

fn parse_export_format(s: &str) -> Result<ExportFormat, String> {
    s.parse().map_err(|e: qscgrn::Error| e.to_string())
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Infer(args) => {
            let file = match &args.config {
                Some(path) => Settings::from_file(path)?,
                None => Settings::default(),
            };
            let opts = InferOptions {
                input: args.input,
                format: args.format,
                genes: args.genes,
                settings: file.overlay(args.settings.to_settings()),
                out_dir: args.out_dir,
                exports: args.export,
                baseline: args.baseline,
            };
            let manifest = run_infer(&opts)?;
            println!(
                "{} genes, {} cells: loss {:.6e}, error {:.6e} after {} iterations; outputs in {}",
                manifest.n_genes,
                manifest.n_cells,
                manifest.final_loss,
                manifest.final_error,
                manifest.iterations,
                opts.out_dir.display()
            );
        }
        Command::Synth(args) => {
            let source = match args.theta {
                Some(path) => ThetaSource::File(path),
                None => ThetaSource::Random { range: args.range },
            };
            let out = run_synth(&SynthOptions {
                n: args.n,
                m: args.m,
                source,
                seed: args.seed,
                out_dir: args.out_dir,
            })?;
            println!(
                "wrote {} and {}",
                out.matrix_path.display(),
                out.theta_path.display()
            );
        }
        Command::Gradcheck(args) => {
            let report = run_gradcheck(args.n, args.seed, args.h)?;
            println!(
                "n={} seed={} h={:e}: max relative error {:.3e}, max absolute error {:.3e}",
                report.n,
                report.seed,
                report.h,
                report.max_relative_error,
                report.max_absolute_error
            );
            if !report.passed() {
                return Err(CliError::Check(format!(
                    "max relative error {:.3e} exceeds {GRADCHECK_TOLERANCE:e}",
                    report.max_relative_error
                )));
            }
        }
        Command::Simulate(args) => {
            run_simulate(&args.theta, &args.out)?;
            println!("wrote {}", args.out.display());
        }
        Command::Replay(args) => {
            let manifest = replay(&args.manifest, &args.out_dir)?;
            println!(
                "replayed: loss {:.6e} after {} iterations; outputs in {}",
                manifest.final_loss,
                manifest.iterations,
                args.out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                qscgrn_cli::error::EXIT_USAGE
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !e.to_string().contains(&s.to_string()) {
                    eprintln!("  caused by: {s}");
                }
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
