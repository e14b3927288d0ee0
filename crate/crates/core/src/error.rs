use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("singular matrix: zero pivot at column {column}")]
    Singular { column: usize },

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid lumping map: {0}")]
    InvalidLumping(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("matrix is not hepta-banded: {0}")]
    NotHeptaBanded(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
