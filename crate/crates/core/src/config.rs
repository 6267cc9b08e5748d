//! Experiment configuration files and command-line overrides.
//!
//! The file is flat TOML whose keys are exactly the fields of
//! [`ExperimentConfig`]; unknown keys are rejected. Missing keys take their
//! defaults.

use std::fs;
use std::path::Path;

use crate::adversary::Strategy;
use crate::error::ConfigError;
use crate::harness::{ExperimentConfig, MessageSource};
use crate::state::QubitIndex;

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}

/// Values given on the command line; each one replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub rounds: Option<u64>,
    pub control_prob: Option<f64>,
    pub announce_fraction: Option<f64>,
    pub adversary: Option<Strategy>,
    pub loss_p: Option<f64>,
    pub seed: Option<u64>,
    pub alice_message: Option<MessageSource>,
    pub bob_message: Option<MessageSource>,
    pub bob_encode_target: Option<QubitIndex>,
}

impl Overrides {
    pub fn apply(self, mut config: ExperimentConfig) -> ExperimentConfig {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { config.$field = v; })*
            };
        }
        set!(
            rounds,
            control_prob,
            announce_fraction,
            adversary,
            loss_p,
            seed,
            alice_message,
            bob_message,
            bob_encode_target
        );
        config
    }
}

/// Effective configuration: defaults, then the file, then the flags.
pub fn resolve(file: Option<&Path>, overrides: Overrides) -> Result<ExperimentConfig, ConfigError> {
    let base = match file {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    let config = overrides.apply(base);
    config.validate()?;
    Ok(config)
}
