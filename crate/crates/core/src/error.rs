use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, AncsError>;

#[derive(Debug, Error)]
pub enum AncsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no stationary support chain: p10 = {p10} exceeds 1 for lambda = {lambda}, p01 = {p01}")]
    InfeasibleChain { lambda: f64, p01: f64, p10: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("all importance levels are zero; column gains are undefined")]
    DegenerateImportance,

    #[error("signal has zero energy; normalized error is undefined")]
    ZeroSignal,

    #[error("every time step was skipped; TNMSE is undefined")]
    NoValidSteps,

    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),

    #[error("unknown preset `{0}` (expected fig3, fig4, fig5, fig6 or fig7)")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl AncsError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        AncsError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
