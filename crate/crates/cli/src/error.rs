use thiserror::Error;

/// Exit status 2 for usage problems, 1 for everything that fails at run time.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<roamsim_core::Error> for CliError {
    fn from(e: roamsim_core::Error) -> Self {
        match e {
            roamsim_core::Error::AlreadyExists { .. } | roamsim_core::Error::InvalidParameter(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<roamsim_predictor::PredictorError> for CliError {
    fn from(e: roamsim_predictor::PredictorError) -> Self {
        use roamsim_predictor::PredictorError as P;
        match e {
            P::Config(_) | P::Core(roamsim_core::Error::AlreadyExists { .. }) => CliError::Usage(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
