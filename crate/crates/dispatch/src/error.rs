use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Weather(#[from] spectral_weather::Error),
    #[error("{entity} refers to unknown zone \"{zone}\"")]
    UnknownZone { entity: String, zone: String },
    #[error("duplicate id \"{0}\"")]
    DuplicateId(String),
    #[error("weather series \"{0}\" not found")]
    MissingSeries(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("horizon {horizon} exceeds the {available} hours of data")]
    Horizon { horizon: usize, available: usize },
    #[error("dispatch LP is unbounded")]
    Unbounded,
    #[error("dispatch LP is infeasible")]
    Infeasible,
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("solution violates {what} by {residual:e}")]
    Residual { what: String, residual: f64 },
    #[error("non-finite sample for metric \"{0}\"")]
    NonFiniteSample(String),
    #[error("relative standard error needs at least 2 samples, got {0}")]
    TooFewSamples(u64),
    #[error("metric mean is zero; relative standard error undefined")]
    ZeroMean,
    #[error("invalid convergence settings: {0}")]
    Settings(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
