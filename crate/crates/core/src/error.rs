use thiserror::Error;

/// Errors shared across the numerical modules.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Invalid caller-supplied value (non-unit direction, γ outside (0,2), ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A domain or function failed one of its structural checks.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A geometric query left the grid or a window exited the source domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Requested measurement finer than the grid can support.
    #[error("resolution too coarse: {0}")]
    Resolution(String),

    /// An analysis precondition (flatness, trapping, nonempty set, ...) failed.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// File format problems in readers.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
