use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("illegal contraction: {0}")]
    Scheme(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("missing order {0} in the S-operator series")]
    MissingOrder(usize),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
