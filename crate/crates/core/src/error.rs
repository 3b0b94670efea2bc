//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by any driftwatt operation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Structural mismatch: missing columns, wrong dimensionality.
    #[error("schema error: {0}")]
    Schema(String),

    /// A cell could not be parsed; carries the 1-based line number.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Input violates a documented contract (bad label, negative energy, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Not enough rows/batches/differences to perform the operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A class required by the operation is absent.
    #[error("empty class: {0}")]
    EmptyClass(String),

    /// Metric undefined on this input (e.g. ROC AUC with one class).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Ratio undefined because both terms are zero.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// Inconsistent or incomplete configuration.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Periods or events arrived out of order.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// Stratified split could not produce two-class partitions.
    #[error("stratification error: {0}")]
    Stratification(String),

    /// Energy scopes opened/closed out of order.
    #[error("instrumentation error: {0}")]
    Instrumentation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
