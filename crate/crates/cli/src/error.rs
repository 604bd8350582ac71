//! Top-level error classification and exit codes: 0 success, 1 check or
//! verification failure, 2 usage error, 3 I/O failure.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    CheckFailure(String),
    #[error("{0}")]
    Failure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::CheckFailure(_) => 1,
            CliError::Failure(_) | CliError::Io(_) => 3,
        }
    }
}
