use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {msg}")]
    Domain { func: &'static str, msg: String },

    /// A bound or transform needs a moment the summand law does not provide.
    #[error("{what} requires {moment}, which is not available")]
    MissingMoment { what: &'static str, moment: String },

    /// Adaptive quadrature hit its segment budget before reaching tolerance.
    #[error("quadrature did not converge near x = {x}: estimated error {error:e}")]
    Quadrature { x: f64, error: f64 },

    /// A root bracket did not contain a sign change.
    #[error("no sign change on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    /// Invalid experiment or CLI configuration.
    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("empty sample")]
    EmptySample,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(func: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            func,
            msg: msg.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
