//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DasError {
    #[error("adjacency contains a directed cycle")]
    CycleDetected,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid degrees of freedom: {0}")]
    InvalidDegreesOfFreedom(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DasError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        DasError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 validation, 2 runtime/numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            DasError::CycleDetected
            | DasError::DimensionMismatch(_)
            | DasError::InvalidParameter(_)
            | DasError::InsufficientSamples { .. }
            | DasError::InvalidDegreesOfFreedom(_)
            | DasError::Parse { .. }
            | DasError::NonFinite { .. } => 1,
            DasError::NumericalFailure(_) => 2,
            DasError::Io { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, DasError>;
