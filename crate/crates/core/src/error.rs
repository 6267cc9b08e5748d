use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::adversary::ParseStrategyError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("rounds must be ≥ 1")]
    ZeroRounds,
    #[error("{field} must be in [0, 1], got {value}")]
    Probability { field: &'static str, value: f64 },
    #[error("invalid {party} message source: {reason}")]
    MessageSource { party: &'static str, reason: String },
    #[error(transparent)]
    Adversary(#[from] ParseStrategyError),
    #[error("cannot read config file {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("invalid config file {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("transcript line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("invalid summary file {}: {message}", path.display())]
    Summary { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    pub source: io::Error,
}
