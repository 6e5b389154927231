//! Error type shared by every module.

use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("duplicate point id {0}")]
    DuplicateId(u64),
    #[error("unknown point id {0}")]
    UnknownId(u64),
    #[error("point {id} has the same coordinates as point {existing}")]
    CoincidentPoint { id: u64, existing: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("oracle limited to {cap} points, got {n}")]
    OracleCap { n: usize, cap: usize },
    #[error("malformed clustering: {0}")]
    MalformedClustering(String),
    #[error("empty point set")]
    Empty,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
