use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the refinement library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, got {actual}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("value out of range in `{field}`: {detail}")]
    OutOfRange { field: &'static str, detail: String },

    #[error("non-finite value in `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("invalid label {value} at pixel {index} (num_labels = {num_labels})")]
    InvalidLabel {
        value: u8,
        index: usize,
        num_labels: usize,
    },

    #[error("zero-sized output ({width}x{height})")]
    ZeroSize { width: usize, height: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("seed set is empty; the random-walker system is singular")]
    EmptySeeds,

    #[error("evaluation set is empty")]
    EmptyEvaluation,

    #[error("grid too large for dense oracle: {pixels} pixels (limit {limit})")]
    OracleSizeExceeded { pixels: usize, limit: usize },

    #[error("bad PRB1 magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("truncated PRB1 payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("unsupported PNG: {0}")]
    UnsupportedPng(String),

    #[error("PNG decode error in {path}")]
    PngDecode {
        path: PathBuf,
        #[source]
        source: png::DecodingError,
    },

    #[error("PNG encode error in {path}")]
    PngEncode {
        path: PathBuf,
        #[source]
        source: png::EncodingError,
    },

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing input: {0}")]
    MissingInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the filesystem or file contents rather
    /// than by the numerical pipeline.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::PngDecode { .. }
                | Error::PngEncode { .. }
                | Error::UnsupportedPng(_)
                | Error::BadMagic(_)
                | Error::Truncated { .. }
                | Error::MissingInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
