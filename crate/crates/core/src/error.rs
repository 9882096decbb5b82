use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is behind the camera (camera-frame depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distortion inversion failed after {iterations} iterations (residual {residual:.3e} px)")]
    InversionFailure { iterations: usize, residual: f64 },

    #[error("unsupported distortion: {0}")]
    UnsupportedDistortion(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate trajectory: {0}")]
    DegenerateTrajectory(String),

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("{}: malformed file at byte offset {offset}: {msg}", path.display())]
    Format {
        path: PathBuf,
        offset: u64,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_)
            | Error::Config(_)
            | Error::DimensionMismatch { .. }
            | Error::TrajectoryMismatch(_)
            | Error::UnsupportedDistortion(_) => ErrorClass::Config,
            Error::Format { .. } | Error::Io { .. } | Error::Image { .. } | Error::Json { .. } => {
                ErrorClass::Io
            }
            Error::BehindCamera { .. }
            | Error::InversionFailure { .. }
            | Error::DegenerateTrajectory(_) => ErrorClass::Numeric,
        }
    }

    pub(crate) fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: impl AsRef<Path>, offset: u64, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            offset,
            msg: msg.into(),
        }
    }

    pub(crate) fn mismatch(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
