use std::path::PathBuf;

use eit_core::EitError;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {path}: {message}")]
    MissingInput { path: PathBuf, message: String },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub const EXIT_CONFIG: i32 = 2;
    pub const EXIT_NUMERICAL: i32 = 3;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => Self::EXIT_NUMERICAL,
            _ => Self::EXIT_CONFIG,
        }
    }
}

impl From<EitError> for CliError {
    fn from(e: EitError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
