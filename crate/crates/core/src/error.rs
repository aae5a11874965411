use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("expected a 2:1 equirectangular image, got {width}x{height}")]
    AspectRatio { width: usize, height: usize },

    #[error("expected an RGB image, got {0} channel(s)")]
    NotRgb(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {required} samples, got {found}")]
    TooFewSamples { required: usize, found: usize },

    #[error("covariance is not symmetric (max asymmetry {asymmetry:e}, scale {scale:e})")]
    NonSymmetric { asymmetry: f64, scale: f64 },

    #[error("matrix is not positive semi-definite: eigenvalue {min_eigenvalue:e} vs largest {max_eigenvalue:e}")]
    NotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("dataset at {} contains no usable images", .0.display())]
    EmptyDataset(PathBuf),

    #[error("failed to decode {}: {source}", path.display())]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{}: {reason}", path.display())]
    BadImage { path: PathBuf, reason: String },

    #[error("failed to encode {}: {source}", path.display())]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("feature backend: {0}")]
    Backend(String),

    #[error("malformed {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Dataset,
    Backend,
    Numeric,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::InvalidConfig(_)
            | Error::AspectRatio { .. }
            | Error::NotRgb(_) => ErrorKind::Input,
            Error::EmptyDataset(_)
            | Error::Decode { .. }
            | Error::BadImage { .. }
            | Error::TooFewSamples { .. } => ErrorKind::Dataset,
            Error::Backend(_) | Error::DimensionMismatch { .. } => ErrorKind::Backend,
            Error::NonSymmetric { .. } | Error::NotPsd { .. } | Error::Numeric(_) => {
                ErrorKind::Numeric
            }
            Error::Encode { .. } | Error::Format { .. } | Error::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
