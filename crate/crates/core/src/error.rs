use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite component at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("negative component {value} at column {col} is outside the chi-square domain")]
    NegativeComponent { col: usize, value: f64 },

    #[error("cannot normalize an all-zero vector")]
    ZeroVector,

    #[error("dataset must contain at least one point of dimension at least 1")]
    EmptyDataset,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {what}: expected {expected}, found {found}")]
    BadMagic {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("truncated file: missing {field}")]
    Truncated { field: String },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("unsupported format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("file stores {found}-byte scalars but {expected}-byte scalars were requested")]
    ScalarWidthMismatch { expected: usize, found: usize },

    #[error("dataset content hash {found:#018x} does not match index hash {expected:#018x}")]
    HashMismatch { expected: u64, found: u64 },

    #[error("size mismatch in {what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: u64,
        found: u64,
    },

    #[error("corrupt file: {0}")]
    Corrupt(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
