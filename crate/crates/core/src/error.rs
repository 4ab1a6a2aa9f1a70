use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty submatrix")]
    EmptySubmatrix,

    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix has a non-finite entry")]
    NonFinite,

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("{what} undefined: matrix is not positive definite (lambda_min = {lambda_min:e})")]
    NotPositiveDefinite { what: &'static str, lambda_min: f64 },

    #[error("degenerate distribution: all coefficients are zero")]
    DegenerateDistribution,

    #[error("no positive coefficient: the upper tail is identically zero")]
    NoPositiveTail,

    #[error("nonpositive diagonal weight {value} at index {index}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge {
        i: usize,
        j: usize,
        reason: &'static str,
    },

    #[error("exhaustive search limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },

    #[error("certificate failed: {0}")]
    CertificateFailed(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
