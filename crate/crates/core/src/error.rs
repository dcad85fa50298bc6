use multifrontal::FactorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("sparse factorization failed: {0}")]
    Factorization(#[from] FactorError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = WgError> = std::result::Result<T, E>;
