//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported JPEG format: {0}")]
    UnsupportedFormat(String),

    #[error("JPEG parse error: {0}")]
    Parse(String),

    #[error("message needs {needed} cover bits but only {available} are available")]
    CapacityExceeded { needed: usize, available: usize },

    #[error("embedding infeasible: {0}")]
    EmbeddingInfeasible(String),

    #[error("key file error: {0}")]
    Key(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
