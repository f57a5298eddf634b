use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed CoNLL-U input. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}:{line}: {message}", path.display())]
    FileParse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Malformed or inconsistent embedding file.
    #[error("embedding file: {message} (byte offset {offset})")]
    Format { offset: u64, message: String },

    #[error("embedding file has no record for sentence `{0}`")]
    MissingRecord(String),

    /// A function was called outside its documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("probe: {0}")]
    Probe(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("I/O: {0}")]
    Stream(#[from] io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn format(offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    /// Attach a file name to a [`Error::Parse`]; other errors pass through.
    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse { line, message } => Error::FileParse {
                path: path.into(),
                line,
                message,
            },
            other => other,
        }
    }

    /// True for errors caused by the user's invocation or configuration
    /// rather than by the data being processed.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
