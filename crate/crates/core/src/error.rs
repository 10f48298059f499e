use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition of an operation was violated (shapes, ranges, counts).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A factorization met a non-positive pivot.
    #[error("matrix is singular or not positive definite at pivot {pivot} (value {value:e})")]
    Singular { pivot: usize, value: f64 },

    /// Normalized cut was asked to partition a graph with no edges.
    #[error("degenerate graph: affinity matrix has no positive weight")]
    DegenerateGraph,

    /// The solver produced a non-finite value.
    #[error("solver diverged at iteration {iteration} in view {view}: {what} is not finite")]
    Divergence {
        iteration: usize,
        view: usize,
        what: &'static str,
    },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
