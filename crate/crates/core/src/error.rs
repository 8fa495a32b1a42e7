use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    InvalidLine { line: usize, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("team too small: {0} member(s), at least 2 required")]
    UndefinedTeam(usize),
    #[error("topic model: {0}")]
    TopicModel(String),
    #[error("only one class present in labels")]
    SingleClass,
    #[error("schema fingerprint mismatch: model expects {expected}, got {actual}")]
    SchemaMismatch { expected: String, actual: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("model artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
