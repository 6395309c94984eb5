use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("matrix is not symmetric: |a_ij - a_ji| = {deviation:e} at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize, deviation: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} has {n} unknowns, above the dense limit {limit}; use an iterative solve with a tight tolerance")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("breakdown in {0}")]
    Breakdown(String),

    #[error("{method} did not converge in {iterations} iterations (relative residual {last:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_dim(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { op, expected, got });
    }
    Ok(())
}
