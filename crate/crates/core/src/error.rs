use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported language: {0}")]
    UnsupportedLanguage(String),

    #[error("parse failure: {0}")]
    ParseFailure(String),

    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: malformed record: {message}", path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("text has no tokens to embed")]
    EmptyText,

    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),

    #[error("{} prompt(s) missing from replay fixture: {}", .0.len(), .0.join(", "))]
    FixtureMiss(Vec<String>),

    #[error("generated clone does not parse: {0}")]
    UnparseableClone(String),

    #[error("generated clone rejected: {0}")]
    RejectedClone(String),

    #[error("query {0} has an empty ground-truth set")]
    EmptyGroundTruth(String),

    #[error("no queries to evaluate")]
    EmptyQuerySet,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("data contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. }
            | Error::Format { .. }
            | Error::EmptyInput(_)
            | Error::InvalidConfig(_)
            | Error::EmptyGroundTruth(_)
            | Error::EmptyQuerySet
            | Error::UnsupportedLanguage(_) => 2,
            Error::ProviderUnavailable(_) => 3,
            Error::DimensionMismatch { .. }
            | Error::DuplicateId(_)
            | Error::Contract(_)
            | Error::ZeroVector
            | Error::EmptyText => 4,
            Error::FixtureMiss(_) => 5,
            Error::ParseFailure(_) | Error::UnparseableClone(_) | Error::RejectedClone(_) => 1,
        }
    }
}
