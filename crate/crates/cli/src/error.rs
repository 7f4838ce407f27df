use std::path::PathBuf;

use solitonlab_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Every entry of a sweep failed.
    #[error("no frequency of the sweep converged")]
    SweepFailed,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for non-convergence, 3 for invalid input, 4 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 3,
            Self::Core(CoreError::Domain(_)) => 3,
            Self::Core(_) | Self::SweepFailed => 2,
            Self::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}
