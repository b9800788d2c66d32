use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or scenario value is out of its domain.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// Malformed sample file.
    #[error("format error: {0}")]
    Format(String),

    /// Structured-text document does not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A chunk or datagram has the wrong size or layout.
    #[error("framing error: {0}")]
    Framing(String),

    /// Input was lost because the consumer could not keep up or the transport dropped data.
    #[error("overrun: {lost_chunks} chunk(s) lost")]
    Overrun { lost_chunks: u64 },

    #[error("worker failed: {0}")]
    Worker(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
