use thiserror::Error;

#[derive(Debug, Error)]
pub enum NrgError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shell {shell}: block storage of {required_bytes} bytes exceeds the {budget_bytes}-byte budget")]
    Resource {
        shell: usize,
        required_bytes: usize,
        budget_bytes: usize,
    },

    #[error("entropy flow never crosses {target:.6}; chain of {chain_length} shells is too short")]
    ChainTooShort { target: f64, chain_length: usize },

    #[error("no valid bracket: {0}")]
    InvalidBracket(String),

    #[error("not found: {}", .0.display())]
    NotFound(std::path::PathBuf),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Model(#[from] kondo_metrology::Error),
}

pub type Result<T, E = NrgError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> NrgError {
    NrgError::InvalidInput(msg.into())
}
