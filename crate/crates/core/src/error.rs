use thiserror::Error;

/// Errors raised by the library. Budget exhaustion during a run is not an
/// error; it is reported through [`crate::runner::RunResult::hit`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration violates a documented constraint (e.g. `mu > lambda`).
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A numeric argument lies outside the domain of the operation.
    #[error("invalid argument: {0}")]
    Domain(String),
    /// Not enough samples or points for the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Malformed textual input (bit strings, fitness specs, trace files).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
