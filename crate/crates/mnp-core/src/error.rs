use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("coordinate {index} violates its bound by {amount:e}")]
    OutOfBounds { index: usize, amount: f64 },
    #[error("frank-wolfe update requires finite upper bounds")]
    InfiniteBound,
    #[error("update rule requires an uncapacitated (NNLS) instance")]
    RequiresUncapacitated,
    #[error("problem exceeds oracle size cap: {0}")]
    SizeCap(String),
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),
    #[error("numerical fault: {0}")]
    NumericalFault(String),
}

pub type Result<T> = std::result::Result<T, Error>;
