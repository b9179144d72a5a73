use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("cannot read {path}: {source}")]
    ReadConfig {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        source: helmcouple::Error,
    },

    #[error("{failed} of {total} verification checks failed")]
    VerifyFailed { failed: usize, total: usize },
}

impl CliError {
    /// 0 ok, 1 failed verification, 2 usage/config/I-O, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::VerifyFailed { .. } => 1,
            Self::Config(_) | Self::ReadConfig { .. } | Self::Output { .. } => 2,
            Self::Numerical { .. } => 3,
        }
    }
}

/// Attaches a stage name to numerical errors.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for helmcouple::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical { stage, source })
    }
}
