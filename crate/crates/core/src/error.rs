use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A linear solve did not meet its residual contract.
    #[error("numeric failure: {message} (relative residual {residual:.3e})")]
    NumericFailure { message: String, residual: f64 },

    /// The two source polarizations produced (nearly) parallel magnetic fields.
    #[error(
        "singular station (ix={ix}, iy={iy}): |zeta| = {zeta:.3e} below threshold {threshold:.3e}"
    )]
    SingularStation {
        ix: usize,
        iy: usize,
        zeta: f64,
        threshold: f64,
    },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
