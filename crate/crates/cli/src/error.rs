//! Errors of the command-line driver and their exit codes.

use chainspectra::ChainError;
use thiserror::Error;

/// Failure of one CLI invocation.
#[derive(Debug, Error)]
pub enum CliError {
    /// Missing or malformed flags, config values or environment settings.
    #[error("invalid arguments: {0}")]
    Usage(String),

    /// A numerical routine failed.
    #[error("solver failure: {0}")]
    Solver(ChainError),

    /// Output could not be written.
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    /// CSV encoding failed.
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl CliError {
    /// Process exit code: 2 for invalid input, 3 for solver failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}
