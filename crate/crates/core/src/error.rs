use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a precondition (mismatched universes, bad partitions, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A structure exceeds one of the configured size caps.
    #[error("capacity error: {what} has size {size}, cap is {cap}")]
    Capacity { what: String, size: u128, cap: u128 },

    /// The observation has zero prior mass at some node of the hierarchy.
    #[error("impossible evidence at node {node}")]
    ImpossibleEvidence { node: String },

    /// A ballot or observation line failed to parse.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A model document violates its schema.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
