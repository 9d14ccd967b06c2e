use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pixel ({x}, {y}) is outside the operator domain")]
    OutOfDomain { x: usize, y: usize },

    #[error("shape has no foreground pixels")]
    EmptyShape,

    #[error("scheme mismatch: expected {expected}, found {found}")]
    SchemeMismatch { expected: String, found: String },

    #[error("training data needs at least two classes, found {0}")]
    DegenerateLabels(usize),

    #[error("invalid feature value: {0}")]
    InvalidFeature(String),

    #[error("dataset at {0} contains no usable samples")]
    EmptyDataset(PathBuf),

    #[error("class `{0}` has too few samples to split")]
    DegenerateClass(String),

    #[error("train/test leakage: {0}")]
    Leakage(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { expected: u32, found: u32 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("sample `{id}`: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("repetition {index}: {source}")]
    Repetition {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn in_sample(self, id: impl Into<String>) -> Error {
        Error::Sample {
            id: id.into(),
            source: Box::new(self),
        }
    }

    pub fn in_repetition(self, index: usize) -> Error {
        Error::Repetition {
            index,
            source: Box::new(self),
        }
    }
}
