use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the numeric core, the generator and the dataset I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid config value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("least-squares fit failed: {0}")]
    Fit(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("corrupt dataset {path}: {detail}")]
    Corrupt { path: PathBuf, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
