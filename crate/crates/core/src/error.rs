use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the reconstruction library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("i/o error on {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated strand payload at strand {index} (expected {expected} vertices)")]
    TruncatedStrand { index: usize, expected: u32 },

    #[error("truncated payload: {0}")]
    Truncated(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("grid spec mismatch: {0}")]
    GridSpecMismatch(String),

    #[error("exterior shell is open at closing radius {radius}; {} hole site(s), first at {:?}", holes.len(), holes.first())]
    OpenShell { radius: usize, holes: Vec<[f64; 3]> },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("ply: {0}")]
    Ply(String),

    #[error("image: {0}")]
    Image(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than by a
    /// failure while processing valid input.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::MalformedHeader(_)
                | Error::DimensionMismatch { .. }
        )
    }
}
