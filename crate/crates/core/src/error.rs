use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {0}")]
    Index(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("value out of range: {0}")]
    Range(String),
    /// Two evaluation routes disagreed; retry at a higher precision.
    #[error("precision loss detected: {0}")]
    Precision(String),
    #[error("kernel is singular: {0}")]
    Singularity(String),
    #[error("quadrature tolerance not met: {0}")]
    ToleranceNotMet(String),
}

pub type Result<T> = std::result::Result<T, Error>;
