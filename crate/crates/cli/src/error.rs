use std::process::ExitCode;

use thiserror::Error;

/// Failures mapped onto the exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input: exit 2.
    #[error("input error: {0}")]
    Input(String),
    /// A predicate, algorithm or verification failed: exit 1.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Failure(_) => ExitCode::from(1),
        }
    }
}

impl From<simtri_core::Error> for CliError {
    fn from(e: simtri_core::Error) -> Self {
        match e {
            simtri_core::Error::NotSquare { .. }
            | simtri_core::Error::EmptyMatrix
            | simtri_core::Error::NonFinite { .. }
            | simtri_core::Error::DimensionMismatch { .. }
            | simtri_core::Error::EmptyFamily
            | simtri_core::Error::InvalidTolerance(_) => CliError::Input(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}
