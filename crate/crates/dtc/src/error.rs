//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The CSV header is missing or does not match the `dtc-csv v1` layout.
    #[error("invalid header at line {line}: {reason}")]
    Header { line: usize, reason: String },

    /// A data row has the wrong number of fields.
    #[error("malformed row at line {line}: expected {expected} fields, found {found}")]
    MalformedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    /// A field could not be parsed as a finite number.
    #[error("parse error at line {line}, column {column}: {reason}")]
    Parse {
        line: usize,
        column: usize,
        reason: String,
    },

    /// The input contains no data rows.
    #[error("controller is empty: no data rows")]
    EmptyController,

    /// A generator description, learner configuration, or CLI argument
    /// is invalid.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Artifacts failed re-verification against their controller table.
    #[error("verification failed: {0}")]
    Verify(String),

    /// An admissible action set must be non-empty.
    #[error("invalid action set: empty")]
    InvalidActionSet,

    /// An entropy query over an empty histogram.
    #[error("empty input: histogram has no labels")]
    EmptyInput,

    /// A state vector has the wrong number of components.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// A state or action component is NaN or infinite.
    #[error("non-finite value in {what} vector")]
    NonFinite { what: &'static str },

    /// A subset could not be split by any candidate predicate even though
    /// it is impure. Reachable only for malformed inputs; distinct states
    /// are always separable by an axis-aligned predicate.
    #[error("inconsistent data: {rows} rows share a state but carry different labels (e.g. rows {example:?})")]
    InconsistentData { rows: usize, example: Vec<usize> },

    /// `max_depth` was reached before all leaves were pure.
    #[error("depth limit {limit} exceeded before purity")]
    DepthExceeded { limit: usize },

    /// A cooperative deadline expired during tree construction.
    #[error("timed out")]
    Timeout,

    /// Classifier training received geometrically degenerate data.
    #[error("training degenerate: all sample points are identical")]
    TrainingDegenerate,

    /// A DOT document could not be parsed back into a tree.
    #[error("invalid DOT input: {0}")]
    Dot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
