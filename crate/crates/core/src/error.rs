//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by tensor arithmetic, layers, and the analysis oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two tensors had incompatible shapes for the attempted operation.
    #[error("{op}: incompatible shapes {lhs_rows}x{lhs_cols} and {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    /// A hyperparameter was outside its valid range (p, q, eps, learning rate, ...).
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    /// An argument violated a precondition (bad index, empty dataset, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The operation is mathematically undefined for this input.
    #[error("undefined for this input: {0}")]
    UndefinedInput(String),

    /// Backward was called without a matching train-mode forward pass.
    #[error("missing forward cache: {0}")]
    MissingCache(&'static str),
}

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::ShapeMismatch {
            op,
            lhs_rows: lhs.0,
            lhs_cols: lhs.1,
            rhs_rows: rhs.0,
            rhs_cols: rhs.1,
        }
    }
}
