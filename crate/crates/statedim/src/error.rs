//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures surfaced by the numerical routines and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// A root or crossing could not be bracketed inside the search range.
    #[error("bracket not found: {0}")]
    BracketNotFound(String),

    /// A matrix that must be invertible (or well separated from zero) is not.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// Filesystem failure while persisting or loading data.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV input or output.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed JSON input or output.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence(_) | Error::BracketNotFound(_) | Error::Degenerate(_)
        )
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
