//! Experiment harness for the sparseout regularizer.
//!
//! Library half of the `sparseout` binary: dataset ingestion (IDX images or
//! a deterministic synthetic fallback), single training runs with per-epoch
//! sparsity records, and the command implementations behind the
//! `train`, `sparsity-sweep`, `verify-theorems`, and `timing-bench`
//! subcommands.

pub mod commands;
pub mod data;
pub mod run;

use thiserror::Error;

/// Errors specific to the harness, wrapping the core library's errors.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input file; names the byte offset where parsing failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] sparseout::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
