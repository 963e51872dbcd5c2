use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FasaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FasaError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("class id {class_id} out of range for {num_classes} classes")]
    ClassOutOfRange { class_id: usize, num_classes: usize },

    #[error("length mismatch: {features} features but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("class {0} has no initialized statistics")]
    Uninitialized(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("not enough samples: {0}")]
    NotEnoughSamples(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("report mismatch: {0}")]
    ReportMismatch(String),

    #[error("run {mode}/seed-{seed} failed: {reason}")]
    RunFailed { mode: String, seed: u64, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl FasaError {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        FasaError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FasaError::Io {
            path: path.into(),
            source,
        }
    }
}
