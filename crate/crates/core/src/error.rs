use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tensor shape {shape:?} holds {expected} values but {actual} were given")]
    TensorLength {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("layer {layer} ({kind}): expected input shape {expected:?}, got {actual:?}")]
    ShapeMismatch {
        layer: usize,
        kind: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("length mismatch: {what} has {actual} entries, expected {expected}")]
    Alignment {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("target {target} at position {position} is not a class index in [0, {classes})")]
    BadTarget {
        position: usize,
        target: usize,
        classes: usize,
    },

    #[error("non-finite loss in batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("non-finite gradient for sample {sample}")]
    NonFiniteGradient { sample: usize },

    #[error("parameter {index} became non-finite after the optimizer step")]
    NonFiniteParameter { index: usize },

    #[error("{path}: bad IDX magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic { path: PathBuf, expected: u32, found: u32 },

    #[error("{path}: truncated IDX file ({detail})")]
    Truncated { path: PathBuf, detail: String },

    #[error("image file has {images} entries but label file has {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("missing dataset files: {}", .expected.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingData { expected: Vec<PathBuf> },

    #[error("label {label} at index {index} is outside [0, 10)")]
    BadLabel { index: usize, label: u8 },

    #[error("importance method mismatch: {left} vs {right}")]
    MethodMismatch { left: String, right: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("statistics: {0}")]
    Stats(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
