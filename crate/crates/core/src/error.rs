use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // Row and column numbers in file errors are 1-based.
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },

    #[error("parse error at row {row}, column {col}: {token:?}")]
    Parse { row: usize, col: usize, token: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("empty label file")]
    EmptyLabels,

    #[error("blank line at line {line} of label file")]
    BlankLabel { line: usize },

    #[error("row/label mismatch: {rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },

    #[error("class {class:?} has {count} member(s), fewer than {required}")]
    UndersizedClass { class: String, count: usize, required: usize },

    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input matrix")]
    EmptyInput,

    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },

    #[error("step {step}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid fitted-compressor blob: {0}")]
    Blob(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("task timed out after step {step}")]
    Timeout { step: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::Step { step, source: Box::new(self) }
    }
}
