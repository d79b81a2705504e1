use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),

    #[error("non-finite sample {value} at node {index}")]
    Sampling { index: usize, value: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("non-finite value at node {index} after step {step}")]
    NonFinite { step: u64, index: usize },

    #[error("weight exponent {max_exponent:.3} exceeds the overflow guard")]
    WeightOverflow { max_exponent: f64 },

    #[error("invalid fit window: {0}")]
    InvalidWindow(String),

    #[error("bump profile violation: {0}")]
    ProfileViolation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for configuration and input errors, 3 for
    /// numeric failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_)
            | Error::NonFinite { .. }
            | Error::WeightOverflow { .. }
            | Error::ProfileViolation(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
