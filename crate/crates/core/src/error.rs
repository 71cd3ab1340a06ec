use thiserror::Error;

/// Errors raised across the toolkit. Each variant maps onto one CLI exit class.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("instance generation stalled after {attempts} attempts: {reason}")]
    Generation { attempts: usize, reason: String },

    #[error("capability exceeded: {0}")]
    Capability(String),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// True for failures of numerical routines (fits, integrators) as
    /// opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration(_) | Error::Fit(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
