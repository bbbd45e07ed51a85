use std::path::{Path, PathBuf};

use qscgrn::io::write_atomic;
use qscgrn::train::{StopReason, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::error::{CliError, StageExt};

/// Everything needed to repeat an `infer` run, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: PathBuf,
    pub input_sha256: String,
    pub format: String,
    pub genes: Option<Vec<String>>,
    pub exports: Vec<String>,
    pub baseline: Option<PathBuf>,
    /// Settings as given on the command line and in the config file.
    pub settings: Settings,
    /// The resolved training configuration.
    pub train_config: TrainConfig,
    pub prune_threshold: f64,
    pub seed: Option<u64>,
    pub gene_order: Vec<String>,
    pub n_genes: usize,
    pub n_cells: usize,
    pub stop: StopReason,
    pub iterations: usize,
    pub final_loss: f64,
    pub final_error: f64,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(qscgrn::Error::from)
            .stage("manifest")?;
        text.push('\n');
        write_atomic(path, text.as_bytes()).stage("manifest")
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| qscgrn::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
        .stage("load")?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
