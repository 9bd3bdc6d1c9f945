use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by folds, kernels and the estimators built on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid data at row {row}: {reason}")]
    Data { row: usize, reason: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e} below -{tolerance:e})")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("not enough degrees of freedom: {rows} rows for rank {rank}")]
    DegreesOfFreedom { rows: u64, rank: usize },

    #[error("perfect separation detected: {0}")]
    PerfectSeparation(String),

    #[error("divergence at epoch {epoch} with step size {step_size:e}; try a smaller alpha0")]
    Divergence { epoch: usize, step_size: f64 },

    #[error("incompatible states: {0}")]
    Merge(String),

    #[error("malformed sketch file: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(expected: usize, actual: usize) -> Self {
        Error::Dimension { expected, actual }
    }

    pub(crate) fn data(row: usize, reason: impl Into<String>) -> Self {
        Error::Data {
            row,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
