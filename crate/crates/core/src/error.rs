use std::path::PathBuf;

/// Errors produced anywhere in the control stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("safety barrier violated (E = {e:.4} m, O = {o:.4} m)")]
    BarrierViolation { e: f64, o: f64 },

    #[error("pose stream exhausted at t = {0} s")]
    StreamExhausted(f64),

    #[error("artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("dataset rejected: {0}")]
    Dataset(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

/// Coarse error class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Safety,
    Io,
    Internal,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::NonFinite(_)
            | Error::InvalidConfig(_)
            | Error::Artifact { .. }
            | Error::Dataset(_)
            | Error::Toml(_) => ErrorCategory::Validation,
            Error::BarrierViolation { .. } => ErrorCategory::Safety,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::StreamExhausted(_) => ErrorCategory::Io,
            Error::Contract(_) => ErrorCategory::Internal,
        }
    }

    pub fn artifact(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Artifact {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
