use std::io;

use thiserror::Error;

use crate::relation::RowId;

/// Errors surfaced by every module of the engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Schema or run configuration is invalid or references unknown columns.
    #[error("configuration error: {0}")]
    Config(String),

    /// A cell of the input table could not be ingested.
    #[error("ingestion error at row {row}, column `{column}`: {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    /// The operation was invoked in a way its contract does not allow.
    #[error("usage error: {0}")]
    Usage(String),

    /// A mathematical precondition of the operation does not hold.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown row id {0}")]
    Lookup(RowId),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A structured-text document could not be parsed.
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
