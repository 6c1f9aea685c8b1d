use thiserror::Error;

/// Errors raised by the geometric kernels, estimators and report plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("columns are numerically dependent (smallest singular value {smallest:.3e})")]
    RankDeficient { smallest: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vector is not unit length (norm {0})")]
    NotUnit(f64),

    #[error("degenerate vector: {0}")]
    DegenerateVector(String),

    #[error("line is contained in the curve")]
    IdenticallyZero,

    #[error("line points are projectively dependent")]
    DegenerateLine,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
