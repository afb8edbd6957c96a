use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown problem `{name}`; available problems: {}", available.join(", "))]
    UnknownProblem { name: String, available: Vec<String> },

    #[error("degenerate interval [{left}, {right}]: left boundary must lie strictly below right boundary")]
    DegenerateInterval { left: f64, right: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: model has {model} equations, problem has {problem}")]
    DimensionMismatch { model: usize, problem: usize },

    #[error("training diverged at epoch {epoch} (non-finite cost or gradient)")]
    Diverged { epoch: usize },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error at {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
