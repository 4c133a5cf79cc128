use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its contract. `key` names the offending
    /// setting (a config key path where one exists).
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("stencil leaves the domain at node {node} along direction {direction:?}")]
    Stencil { node: usize, direction: [i32; 2] },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("{phase} did not converge after {iterations} iterations (last change {last:.3e})")]
    NonConvergence {
        phase: &'static str,
        iterations: usize,
        last: f64,
        diagnostics: Box<SolveDiagnostics>,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("ellipticity violated: {0}")]
    Ellipticity(String),

    /// Ordered data produced unordered solutions; the payload lists every witness.
    #[error("comparison violated:\n{0}")]
    ComparisonViolation(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
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
