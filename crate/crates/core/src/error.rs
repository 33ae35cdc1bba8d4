use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants are grouped so that front ends can map them onto exit
/// categories (input, capacity, numeric, I/O).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("problem has {n} variables, annealer limit is {limit}")]
    Capacity { n: usize, limit: usize },

    #[error("non-finite loss at epoch {epoch}: {loss}")]
    NonFinite { epoch: usize, loss: f64 },

    #[error("no admissible hierarchy level under limit {limit} (coarsest level has {coarsest} nodes)")]
    NoAdmissibleLevel { limit: usize, coarsest: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
