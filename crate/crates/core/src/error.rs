use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("conditioning event has probability zero: {0}")]
    ZeroProbability(String),

    #[error("{what}: requested {requested}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("rational mode requires rational parameters: {0}")]
    NonRational(String),

    #[error("absolute continuity fails: {0}")]
    AbsoluteContinuity(String),

    #[error("configuration is not regular: {0}")]
    Irregular(String),

    #[error("cannot certify truncation error: {0}")]
    Uncertifiable(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::ZeroProbability(_) => "zero_probability",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::NonRational(_) => "non_rational",
            Error::AbsoluteContinuity(_) => "absolute_continuity",
            Error::Irregular(_) => "irregular",
            Error::Uncertifiable(_) => "uncertifiable",
        }
    }
}
