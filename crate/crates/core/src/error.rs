use thiserror::Error;

use crate::channel::DensityMatrix;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix has {got} entries, expected {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, got: usize },

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("Kraus operators are not complete (deviation {0:e})")]
    IncompleteKraus(f64),

    #[error("Kraus operator list is empty")]
    EmptyKraus,

    #[error("matrix is numerically singular")]
    Singular,

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("fixed-point iteration stopped after {iterations} iterations with residual {residual:e}; the peripheral spectrum may not be simple")]
    MaxIterationsExceeded {
        best: Box<DensityMatrix>,
        residual: f64,
        iterations: usize,
    },

    #[error("wedge power order {k} out of range 1..={d}")]
    WedgeOrder { k: usize, d: usize },

    #[error("invalid probability vector: {0}")]
    InvalidProbabilityVector(String),

    #[error("composition would produce {count} Kraus operators (cap {cap}); compose superoperators instead")]
    TooManyKrausOperators { count: usize, cap: usize },

    #[error("no class-C channel found after {0} retries")]
    RetryCapExhausted(usize),

    #[error("state drifted by {drift:e} at step {step}")]
    Drift { step: usize, drift: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
