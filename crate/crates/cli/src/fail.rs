//! Errors that end a run before a report is produced, with their exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Failure {
    /// Unreadable, unparsable or inconsistent input.
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("resource guard: {0}")]
    Guard(String),
    #[error("{0}")]
    Internal(String),
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure::Invalid(msg.into())
    }

    pub fn from_lib(e: relk::Error) -> Self {
        match e {
            relk::Error::Usage(m) | relk::Error::Parse(m) => Failure::Invalid(m),
            relk::Error::ResourceGuard(m) => Failure::Guard(m),
            relk::Error::Internal(m) => Failure::Internal(m),
        }
    }

    /// Prepend a location such as `triples.T.complex.p`.
    pub fn prefixed(self, loc: &str) -> Self {
        match self {
            Failure::Invalid(m) => Failure::Invalid(format!("{loc}: {m}")),
            Failure::Guard(m) => Failure::Guard(format!("{loc}: {m}")),
            Failure::Internal(m) => Failure::Internal(format!("{loc}: {m}")),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Guard(_) => 3,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<relk::Error> for Failure {
    fn from(e: relk::Error) -> Self {
        Failure::from_lib(e)
    }
}
