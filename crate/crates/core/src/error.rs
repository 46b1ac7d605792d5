use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A hyperparameter or argument outside its legal domain.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A value type could not be constructed from its inputs.
    #[error("construction error: {0}")]
    Construction(String),

    /// A dataset generator setup that cannot be realized.
    #[error("dataset spec error: {0}")]
    Spec(String),

    #[error("index {index} out of range for {len} classes")]
    Index { index: usize, len: usize },

    #[error("non-finite value in {0}")]
    Numeric(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Malformed metric inputs (lengths, labels, score rows).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("lambert w: argument {0} is below -1/e")]
    Domain(f64),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("schema error at line {line}: {reason}")]
    Schema { line: usize, reason: String },

    /// An activation cache that does not belong to the current parameters.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
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
