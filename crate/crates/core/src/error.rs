use thiserror::Error;

/// Errors produced by the estimation toolkit.
#[derive(Debug, Error)]
pub enum MbError {
    /// Invalid arguments, inconsistent dimensions, or a violated precondition.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A numerical routine failed (rank deficiency, non-convergence, LAPACK error).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Configuration file problems.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MbError>;
