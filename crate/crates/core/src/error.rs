//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed cell content; `row` is 1-based over data rows, `column` is
    /// the header name of the offending column.
    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("degenerate covariate: {0}")]
    DegenerateCovariate(String),
    #[error("design error: {0}")]
    Design(String),
    #[error("eligibility error: {0}")]
    Eligibility(String),
    #[error("empty result: {0}")]
    EmptyResult(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("initialization error: {0}")]
    Initialization(String),
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("argument error: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
