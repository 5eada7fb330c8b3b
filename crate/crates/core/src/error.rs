use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// The input is well-formed but uses an encoding we do not read.
    #[error("unsupported format: {0}")]
    Format(String),

    /// The input is malformed or truncated.
    #[error("parse error: {0}")]
    Parse(String),

    /// Bad user configuration (feature config, bench cell, config file).
    #[error("config error: {0}")]
    Config(String),

    /// An argument outside its allowed range.
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Data that violates a precondition (too few frames, missing files, ...).
    #[error("data error: {0}")]
    Data(String),

    #[error("numeric error: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error stems from user configuration (CLI exit code 2).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Param(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
