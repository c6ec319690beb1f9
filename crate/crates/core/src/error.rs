use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("column \"{0}\" has no metadata entry")]
    MissingMetadata(String),

    #[error("duplicate series id \"{0}\"")]
    DuplicateSeries(String),

    #[error("invalid metadata for \"{id}\": {reason}")]
    InvalidMetadata { id: String, reason: String },

    #[error("non-monotonic timestamps at row {row}")]
    NonMonotonicTimestamps { row: usize },

    #[error("gapped timestamps at row {row}: expected {expected}, found {found}")]
    GappedTimestamps {
        row: usize,
        expected: String,
        found: String,
    },

    #[error("bad timestamp \"{value}\" at row {row}")]
    BadTimestamp { row: usize, value: String },

    #[error("non-numeric cell \"{value}\" at row {row}, column \"{column}\"")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("panel error: {0}")]
    Panel(String),

    #[error("fewer than 2 complete years (found {found})")]
    InsufficientYears { found: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("covariance of bin {bin} is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { bin: usize, min_eigenvalue: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid clustering request: {0}")]
    Cluster(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
