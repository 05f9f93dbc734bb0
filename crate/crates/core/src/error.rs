//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A profile violates a structural invariant (array lengths, ordering, signs).
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A line of an input stream could not be decoded.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// A decoded row was rejected by validation.
    #[error("invalid sample at row {row}: {msg}")]
    Sample { row: u64, msg: String },

    /// Matrix / vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Data is degenerate for the requested operation (e.g. a constant feature column).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// A configuration value or combination is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
