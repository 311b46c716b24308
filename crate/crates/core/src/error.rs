use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by record ingestion, preprocessing and detection.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed header: {0}")]
    Structure(String),

    #[error("unsupported signal format {0} (only 212 and 16 are supported)")]
    UnsupportedFormat(u16),

    #[error("signal data truncated at byte offset {offset}: {message}")]
    Decode { offset: usize, message: String },

    #[error("annotation validation failed: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("input too short: need at least {needed} samples, got {got}")]
    InputTooShort { needed: usize, got: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Coarse classification used by front ends to choose exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::EmptyInput(_)
            | Error::Structure(_)
            | Error::UnsupportedFormat(_)
            | Error::Decode { .. }
            | Error::Validation(_) => ErrorKind::Parse,
            Error::Config(_) => ErrorKind::Config,
            Error::InputTooShort { .. } => ErrorKind::Processing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Parse,
    Processing,
}

pub type Result<T> = std::result::Result<T, Error>;
