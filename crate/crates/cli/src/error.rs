use std::path::PathBuf;

use kondo_nrg::NrgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("resource error: {0}")]
    Resource(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Model(#[from] kondo_metrology::Error),

    #[error(transparent)]
    Nrg(NrgError),
}

impl From<NrgError> for CliError {
    fn from(e: NrgError) -> Self {
        match e {
            NrgError::NotFound(p) => CliError::NotFound(p),
            NrgError::Resource { .. } => CliError::Resource(e.to_string()),
            other => CliError::Nrg(other),
        }
    }
}

impl CliError {
    /// Process exit status: 2 for resource exhaustion and failed file writes, 1 for everything
    /// the user can fix in the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Resource(_) | CliError::Io { .. } => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                CliError::NotFound(path)
            } else {
                CliError::Io { path, source }
            }
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
