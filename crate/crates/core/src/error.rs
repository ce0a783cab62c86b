//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the CLI exit codes: `Config` is a usage error (1),
/// `Data`/`Io`/`Json` are data errors (2), `Numeric` is a numeric failure (3).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numeric failure (non-finite values, degenerate math).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Exit code for the CLI: 1 usage, 2 data error, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Numeric(_) => 3,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
