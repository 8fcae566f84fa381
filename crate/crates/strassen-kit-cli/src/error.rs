//! CLI error taxonomy and exit-code mapping.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Lib(#[from] strassen_kit::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Exit code contract: 0 success, 1 validation/usage, 2 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }
}
