//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("label length mismatch: expected {expected}, got {got}")]
    LabelLengthMismatch { expected: usize, got: usize },

    #[error("hyperplane normal must be finite and nonzero")]
    InvalidNormal,

    #[error("at most 64 comparators are supported, got {got}")]
    TooManyComparators { got: usize },

    #[error("duplicate region label at indices {first} and {second}")]
    DuplicateLabel { first: usize, second: usize },

    #[error("configuration has no hyperplane to move")]
    EmptyConfiguration,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv line {line}: {message}")]
    CsvParse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
