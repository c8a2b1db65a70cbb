use thiserror::Error;

use crate::odesim::RunRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("non-finite integrator stage at t = {t}")]
    NonFinite { t: f64 },

    /// A state left the finite region (or exceeded the divergence bound).
    /// `record` holds everything logged before the abort.
    #[error("simulation diverged at t = {t}")]
    Diverged { t: f64, record: Box<RunRecord> },

    #[error("unknown preset `{name}` (available: {available})")]
    UnknownPreset { name: String, available: String },

    #[error("config parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
