use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: slit endpoint at xi1 = {xi1}, a = {a}")]
    SlitEndpoint { xi1: f64, a: f64 },

    #[error("no convergence after {iterations} iterations: {detail}")]
    Convergence { iterations: usize, detail: String },

    #[error("eigensolver stopped after {iterations} iterations; best residuals {residuals:?} exceed {tol:e}")]
    EigenNotConverged {
        iterations: usize,
        residuals: Vec<f64>,
        tol: f64,
    },

    #[error("grid does not resolve the strips: {0}")]
    Resolution(String),

    #[error("problem has {unknowns} unknowns, above the cap of {cap}")]
    MemoryGuard { unknowns: usize, cap: usize },

    #[error("inconsistent first-order correction: solvability residual {residual:e} > {tol:e}")]
    Compatibility { residual: f64, tol: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
