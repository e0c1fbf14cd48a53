use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the extraction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("reference error: {0}")]
    Reference(String),

    #[error("entity {entity_id} does not align with token boundaries")]
    Alignment { entity_id: String },

    #[error("corpus too small to split: {0}")]
    Split(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in layer {layer}: {what}")]
    Numeric { layer: usize, what: String },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("model/vocabulary mismatch: {0}")]
    Mismatch(String),

    #[error("path not found: {}", .0.display())]
    MissingPath(PathBuf),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for usage and path problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingPath(_) | Error::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
