//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TvciError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("grid or convention mismatch: {0}")]
    Mismatch(String),

    #[error("dense construction too large: {0}")]
    SizeGuard(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, TvciError>;
