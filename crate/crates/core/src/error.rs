use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("invalid partition: cell side {cell} does not divide cube side {side}")]
    InvalidPartition { side: usize, cell: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    #[error("eigensolver did not converge for eigenvalue {index} after {sweeps} sweeps (n = {n})")]
    NoConvergence { index: usize, sweeps: usize, n: usize },

    #[error("energy {energy} lies outside the certified window (K = {k})")]
    OutsideWindow { energy: f64, k: f64 },

    #[error("no cell side up to {ell_max} satisfies the free bound at E0 = {energy}")]
    SearchExhausted {
        energy: f64,
        ell_max: usize,
        /// `(ell, K_ell - D/ell)` for every side tried.
        trajectory: Vec<(usize, f64)>,
    },

    #[error("certificate failed at center E_{index} = {energy}: {source}")]
    Certificate {
        index: usize,
        energy: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("realization {index} failed: {reason}")]
    Worker { index: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
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

pub type Result<T> = std::result::Result<T, Error>;
