use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{missing} not found; run `cfdkit {command}` first")]
    Prerequisite { missing: PathBuf, command: &'static str },

    #[error("data error in {path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error(transparent)]
    Model(#[from] cfdkit::Error),

    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn data(path: &Path, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration and stage-order problems, 3 for bad data.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Prerequisite { .. } => 2,
            CliError::Model(cfdkit::Error::Config(_)) => 2,
            CliError::Data { .. } | CliError::Model(_) | CliError::Io { .. } => 3,
        }
    }
}
