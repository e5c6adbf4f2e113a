use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid prevalence: {0}")]
    InvalidPrevalence(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("class {class} has {available} instances, {requested} requested (shortfall {shortfall})")]
    Shortfall {
        class: usize,
        requested: usize,
        available: usize,
        shortfall: usize,
    },

    #[error("class {class} has {available} instances, need at least {required}; try lowering k")]
    TooFewForFolds {
        class: usize,
        available: usize,
        required: usize,
    },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("class {0} has no training instances")]
    MissingClass(usize),

    #[error("sample {sample_id}: {reason}")]
    Validation { sample_id: u64, reason: String },

    #[error("{0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
            _ => Error::Format(e.to_string()),
        }
    }
}
