use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dims(String),
    #[error("invalid probability table: {0}")]
    InvalidPmf(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("overlapping variable groups in information functional")]
    OverlappingGroups,
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("inconsistent type counts: {0}")]
    InconsistentTypes(String),
    #[error("infeasible constraint set: {0}")]
    Infeasible(String),
    #[error("empty type class")]
    EmptyTypeClass,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0}")]
    Schema(String),
    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
