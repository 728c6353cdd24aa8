use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("compile error: {}", .violations.join("; "))]
    Compile { violations: Vec<String> },

    #[error(
        "measurement map is informationally incomplete: {determined} of {parameters} parameters determined (null space dimension {null_dim})"
    )]
    InformationallyIncomplete {
        parameters: usize,
        determined: usize,
        null_dim: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
