use thiserror::Error;

/// Errors produced by the numerical routines and file loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("eigensolver did not converge for a {dim}x{dim} matrix (off-diagonal residual {residual:e})")]
    NotConverged { dim: usize, residual: f64 },

    #[error("prior optimization did not converge after {iterations} iterations (stationarity residual {residual:e})")]
    OptimizerNotConverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below tolerance")]
    NotPsd { eigenvalue: f64 },

    #[error("composite dimension {dim} exceeds the configured cap {cap}")]
    DimensionLimit { dim: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input letter {letter} outside the alphabet of size {alphabet}")]
    InvalidLetter { letter: usize, alphabet: usize },

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
