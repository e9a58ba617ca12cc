use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("robot collided with a wall at frame {frame} (clearance {clearance:.4} m)")]
    Collision { frame: usize, clearance: f64 },

    #[error("{path}: already exists (use force to overwrite)")]
    AlreadyExists { path: PathBuf },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `location` is a 1-based line number for text files or a byte offset for binary ones.
    #[error("{path}: malformed at {location}: {message}")]
    Malformed {
        path: PathBuf,
        location: String,
        message: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed_line(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            location: format!("line {line}"),
            message: message.into(),
        }
    }

    pub(crate) fn malformed_byte(path: impl Into<PathBuf>, offset: usize, message: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            location: format!("byte {offset}"),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
