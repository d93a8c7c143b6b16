use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: {0}")]
    Range(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("data error: {0}")]
    Data(String),

    /// Ingestion error tied to a line of an input file.
    #[error("{path}:{line}: {message}")]
    Ingest {
        path: String,
        line: u64,
        message: String,
    },

    #[error("singular weighted normal equations at column {column}")]
    Singular { column: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("detection error: {0}")]
    Detection(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Argument(_) | Error::Range(_) => 2,
            Error::Data(_)
            | Error::Ingest { .. }
            | Error::Detection(_)
            | Error::Evaluation(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 3,
            Error::Singular { .. }
            | Error::Numerical(_)
            | Error::Training(_)
            | Error::Calibration(_) => 4,
        }
    }
}
