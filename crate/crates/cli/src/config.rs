//! Run settings gathered from an optional TOML file and command-line flags.
//!
//! Recognised file keys: `learning_rate`, `max_iterations`, `loss_threshold`,
//! `alpha`, `log_every`, `prune`, `init` (`zeros`, `uniform` or `normal`),
//! `init_low`, `init_high`, `init_mean`, `init_sd` and `seed`. Flags win over
//! the file.

use std::path::Path;

use qscgrn::grn::DEFAULT_PRUNE_THRESHOLD;
use qscgrn::train::{InitStrategy, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Zeros,
    Uniform,
    Normal,
}

/// Every field optional so that a file and flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub learning_rate: Option<f64>,
    pub max_iterations: Option<usize>,
    pub loss_threshold: Option<f64>,
    pub alpha: Option<f64>,
    pub log_every: Option<usize>,
    pub prune: Option<f64>,
    pub init: Option<InitKind>,
    pub init_low: Option<f64>,
    pub init_high: Option<f64>,
    pub init_mean: Option<f64>,
    pub init_sd: Option<f64>,
    pub seed: Option<u64>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            learning_rate: over.learning_rate.or(self.learning_rate),
            max_iterations: over.max_iterations.or(self.max_iterations),
            loss_threshold: over.loss_threshold.or(self.loss_threshold),
            alpha: over.alpha.or(self.alpha),
            log_every: over.log_every.or(self.log_every),
            prune: over.prune.or(self.prune),
            init: over.init.or(self.init),
            init_low: over.init_low.or(self.init_low),
            init_high: over.init_high.or(self.init_high),
            init_mean: over.init_mean.or(self.init_mean),
            init_sd: over.init_sd.or(self.init_sd),
            seed: over.seed.or(self.seed),
        }
    }

    pub fn prune_threshold(&self) -> f64 {
        self.prune.unwrap_or(DEFAULT_PRUNE_THRESHOLD)
    }

    /// Random initializations must be seeded so a run can be repeated.
    pub fn init_strategy(&self) -> Result<InitStrategy, CliError> {
        let need_seed = |kind: &str| {
            self.seed
                .ok_or_else(|| CliError::Usage(format!("--init {kind} requires --seed")))
        };
        Ok(match self.init.unwrap_or(InitKind::Zeros) {
            InitKind::Zeros => InitStrategy::AllZeros,
            InitKind::Uniform => InitStrategy::Uniform {
                low: self.init_low.unwrap_or(-0.1),
                high: self.init_high.unwrap_or(0.1),
                seed: need_seed("uniform")?,
            },
            InitKind::Normal => InitStrategy::Normal {
                mean: self.init_mean.unwrap_or(0.0),
                sd: self.init_sd.unwrap_or(0.1),
                seed: need_seed("normal")?,
            },
        })
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            loss_threshold: self.loss_threshold.or(d.loss_threshold),
            alpha: self.alpha.unwrap_or(d.alpha),
            init_strategy: self.init_strategy()?,
            log_every: self.log_every.unwrap_or(d.log_every),
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Settings =
            toml::from_str("learning_rate = 0.5\nmax_iterations = 10\nalpha = 2.0\n").unwrap();
        let flags = Settings {
            max_iterations: Some(3),
            ..Default::default()
        };
        let s = file.overlay(flags);
        let cfg = s.train_config().unwrap();
        assert_eq!(cfg.learning_rate, 0.5);
        assert_eq!(cfg.max_iterations, 3);
        assert_eq!(cfg.alpha, 2.0);
    }

    #[test]
    fn random_init_needs_seed() {
        let s = Settings {
            init: Some(InitKind::Uniform),
            ..Default::default()
        };
        assert!(matches!(s.init_strategy(), Err(CliError::Usage(_))));
        let s = Settings { seed: Some(4), ..s };
        assert!(matches!(
            s.init_strategy(),
            Ok(InitStrategy::Uniform { seed: 4, .. })
        ));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<Settings>("lr = 1\n").is_err());
    }
}
