use thiserror::Error;

/// Errors raised across embedding, recovery, analysis and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A position lies outside the RSU coverage interval `[0, L)`.
    #[error("position {position} m is outside the coverage interval [0, {length})")]
    OutOfCoverage { position: f64, length: f64 },

    /// A parameter violates the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The recovered filters admit no assignment consistent with the routing
    /// and communication constraints.
    #[error("inconsistent provenance: {0}")]
    InconsistentProvenance(String),

    /// A computation would exceed a configured size limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Malformed wire data, compressed body or text format.
    #[error("decode error: {0}")]
    Decode(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
