use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bvh parse error at line {line}: {msg}")]
    Bvh { line: usize, msg: String },

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("code {code} out of range for a codebook of {count} codes")]
    CodeOutOfRange { code: usize, count: usize },

    #[error("database is empty")]
    EmptyDatabase,

    #[error("every code is masked at step {step}")]
    AllMasked { step: usize },

    #[error("no code satisfies the constraint")]
    EmptyConstraint,

    #[error("format error in {path}: {msg}")]
    Format { path: String, msg: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn bvh(line: usize, msg: impl Into<String>) -> Self {
        Error::Bvh {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn format(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Short stable identifier, used for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Bvh { .. } => "bvh",
            Error::DimensionMismatch { .. } => "dimension",
            Error::InsufficientData(_) => "insufficient-data",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::CodeOutOfRange { .. } => "code-range",
            Error::EmptyDatabase => "empty-database",
            Error::AllMasked { .. } => "all-masked",
            Error::EmptyConstraint => "empty-constraint",
            Error::Format { .. } => "format",
            Error::NonFinite(_) => "non-finite",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
