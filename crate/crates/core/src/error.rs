use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or invalid configuration (plan, model, file metadata).
    #[error("configuration error: {0}")]
    Config(String),

    /// The estimation window around `t0` does not fit inside `1..=len`.
    #[error("window of length {n} centered at t0={t0} exits the sample 1..={len}")]
    Boundary { t0: usize, n: usize, len: usize },

    /// A recursion produced a non-finite value. `t` is negative during burn-in.
    #[error("simulation produced a non-finite value at t={t}{context}")]
    Simulation { t: i64, context: String },

    /// A cell of an input file could not be parsed.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: u64,
        column: usize,
        message: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach context (model parameters, replication index) to a simulation error.
    pub(crate) fn with_context(self, ctx: impl AsRef<str>) -> Self {
        match self {
            Error::Simulation { t, context } => Error::Simulation {
                t,
                context: format!("{context} ({})", ctx.as_ref()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
