//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An operation that needs at least one sample received none.
    #[error("empty dataset")]
    EmptyData,

    /// Column counts of a model and a feature matrix disagree.
    #[error("dimension mismatch: expected {expected} columns, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The requested column is absent from a CSV header.
    #[error("column {column:?} not found in header")]
    MissingColumn { column: String },

    /// A cell could not be parsed as a number (1-based row index,
    /// counting the header as row 1).
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    /// A serialized model document is not valid JSON or misses fields.
    /// The message carries the parser's line/column location.
    #[error("malformed model document: {0}")]
    MalformedModel(String),

    #[error("unsupported schema version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    /// The solver could not produce a finite model.
    #[error("fit failed: {0}")]
    FitFailure(String),
}
