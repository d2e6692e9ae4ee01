use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),

    #[error("malformed {format} input: {reason}")]
    Malformed { format: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value {value} at row {row}, column {col} is outside [-1, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("training diverged at step {step}: loss {loss} exceeds 10x initial {initial}")]
    Diverged { step: usize, loss: f64, initial: f64 },

    #[error("denoiser failed at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("metric failed at sigma {sigma}: {source}")]
    AtSigma {
        sigma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: &'static str, found: Vec<u8> },

    #[error(transparent)]
    Plugin(#[from] PluginError),
}

impl Error {
    pub(crate) fn malformed(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Malformed {
            format,
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidArgument(reason.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(step: usize, source: Error) -> Self {
        Error::AtStep {
            step,
            source: Box::new(source),
        }
    }

    pub(crate) fn at_sigma(sigma: f64, source: Error) -> Self {
        Error::AtSigma {
            sigma,
            source: Box::new(source),
        }
    }

    /// The innermost plugin failure, if this error wraps one.
    pub fn plugin_cause(&self) -> Option<&PluginError> {
        match self {
            Error::Plugin(p) => Some(p),
            Error::AtStep { source, .. } | Error::AtSigma { source, .. } => source.plugin_cause(),
            _ => None,
        }
    }
}

/// Failures of the external denoiser process, kept distinct so callers can
/// tell a misbehaving plugin from a dead or slow one.
#[derive(Debug, Error)]
pub enum PluginError {
    #[error("plugin protocol violation: {0}")]
    Protocol(String),

    #[error("plugin process exited (status: {status:?})")]
    Exited { status: Option<i32> },

    #[error("plugin did not respond within {0:?}")]
    Timeout(Duration),

    #[error("plugin dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("failed to launch plugin `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("plugin i/o error: {0}")]
    Io(#[from] std::io::Error),
}
