use std::path::PathBuf;

use thiserror::Error;

use crate::models::ModelState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{what}: expected shape {expected:?}, got {actual:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("series of length {len} is too short for pooling kernel {kernel} with padding {padding}")]
    SeriesTooShort {
        len: usize,
        kernel: usize,
        padding: usize,
    },

    #[error("invalid pyramid for base length {base}: level {level} would have length < 1")]
    InvalidPyramid { base: usize, level: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("channel `{0}` has zero variance on the training range")]
    ZeroVariance(String),

    #[error("{path}: row {row}, column `{column}`: cannot parse `{value}`")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("{path}: duplicate or non-increasing timestamp at row {row}")]
    Timestamp { path: PathBuf, row: usize },

    #[error("dataset has {rows} rows, fewer than lookback + horizon = {needed}")]
    TooShort { rows: usize, needed: usize },

    #[error("no windows to evaluate")]
    EmptyWindows,

    #[error("missing report cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: non-finite loss")]
    Diverged {
        epoch: usize,
        batch: usize,
        last_good: Box<ModelState>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
