use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("timestamps not strictly increasing at line {line}: {prev_ms} ms followed by {next_ms} ms")]
    NonMonotonic { line: usize, prev_ms: i64, next_ms: i64 },

    #[error("timestamps not strictly increasing at index {index}")]
    NotIncreasing { index: usize },

    #[error("overlapping intervals: ({a_start}, {a_end}) and ({b_start}, {b_end})")]
    Overlap { a_start: f64, a_end: f64, b_start: f64, b_end: f64 },

    #[error("zero quaternion cannot be normalized")]
    ZeroQuaternion,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("empty window for candidate ({c1}, {c2}) after clipping")]
    EmptyWindow { c1: f64, c2: f64 },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("feature layout mismatch: model expects {expected}, got {actual}")]
    LayoutMismatch { expected: String, actual: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
