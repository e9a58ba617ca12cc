use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("action {index} ({v}, {omega}) is outside the actuation envelope")]
    ActionOutOfEnvelope { index: usize, v: f64, omega: f64 },

    #[error("need {needed} actions, got {got}")]
    InsufficientActions { needed: usize, got: usize },

    #[error("no training clips available")]
    NoClips,

    #[error("{path}: invalid checkpoint: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(transparent)]
    Core(#[from] roamsim_core::Error),
}

impl PredictorError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PredictorError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn checkpoint(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        PredictorError::Checkpoint {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = PredictorError> = std::result::Result<T, E>;
