use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("parse error in {path}: {message} (byte offset {offset})")]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("activation mismatch: expected {expected}, found {found}")]
    ActivationMismatch { expected: String, found: String },

    #[error("duplicate tangent point {0}")]
    DuplicateTangent(f64),

    #[error("no admissible tangent candidate left")]
    Exhausted,

    #[error("diagnostics unavailable: {0}")]
    Diagnostics(String),

    #[error("structure string {input:?}: {message} at position {position}")]
    Structure {
        input: String,
        position: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
