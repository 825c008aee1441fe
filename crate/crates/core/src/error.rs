use std::path::PathBuf;

use crate::rates::RateEstimate;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-range caller input.
    #[error("input error: {0}")]
    Input(String),

    #[error("alphabet mismatch: expected `{expected}`, found `{found}`")]
    AlphabetMismatch { expected: String, found: String },

    /// A value outside the domain on which the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsupported configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("memory budget of {budget} distinct elements exceeded; complete through abstract length {depth_reached}")]
    Resource { budget: usize, depth_reached: u32 },

    /// Too few nonzero annuli for a regression. Carries whatever could be estimated.
    #[error("insufficient data: {reason}")]
    LowData {
        reason: String,
        partial: Option<Box<RateEstimate>>,
    },

    #[error("count overflow while accumulating {0}")]
    Overflow(&'static str),

    #[error("format error in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
