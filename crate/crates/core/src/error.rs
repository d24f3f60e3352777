use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A domain parameter violated its invariant (named key, offending value).
    #[error("invalid parameter `{key}`: {message}")]
    InvalidParam { key: String, message: String },

    /// Image or line geometry is inconsistent.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Calibration cannot produce a finite quantile (e.g. m < 1).
    #[error("calibration error: {0}")]
    Calibration(String),

    /// Model training failed (too little data, divergence).
    #[error("training error: {0}")]
    Training(String),

    /// A binary or text file did not match its documented format.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// Configuration file or CLI override problem.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_param(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
