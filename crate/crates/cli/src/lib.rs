//! The `qscgrn` command-line pipeline as a library, so every subcommand can
//! also be driven from tests.

pub mod check;
pub mod config;
pub mod error;
pub mod infer;
pub mod manifest;
pub mod synth;

pub use check::{run_gradcheck, run_simulate, GradcheckReport};
pub use config::{InitKind, Settings};
pub use error::CliError;
pub use infer::{replay, run_infer, InferOptions};
pub use manifest::RunManifest;
pub use synth::{run_synth, SynthOptions, SynthOutput, ThetaSource};
