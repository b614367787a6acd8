use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A numerical or structural parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An operation was called on state that does not support it.
    #[error("usage error: {0}")]
    Usage(String),

    /// The corrector system has a null space larger than the constants.
    #[error("graph has {components} connected components; the corrector system is singular beyond the gauge")]
    Disconnected { components: usize },

    /// No particles remain, so no further event can fire.
    #[error("total event rate is zero (all particles dead)")]
    Absorbed,

    /// An iterative solver ran out of iterations.
    #[error("conjugate gradient stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    /// Malformed input text, with a 1-based line number when known.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Every constraint a configuration violates.
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    /// A harness stage failed; partial results were kept by the caller.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
