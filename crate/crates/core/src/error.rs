use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside [{lo}, {hi}] ({what})")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("CFL violated: dt·v_max = {lhs:.6e} km > dx = {rhs:.6e} km (need Δt·sup|f'(u)| ≤ Δx)")]
    Cfl { lhs: f64, rhs: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("bad tensor file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
