use thiserror::Error;

use crate::instance::Time;

/// Errors raised while building or transforming scheduling data.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("time value {value} has {found} fractional digits but the scale allows {allowed}")]
    Scale {
        value: String,
        found: u32,
        allowed: u32,
    },

    #[error("time value {0} overflows the scaled integer range")]
    Overflow(String),

    #[error("invalid decimal literal {0:?}")]
    Decimal(String),

    #[error("invalid calendar interval [{start}, {end}): start must precede end")]
    Interval { start: Time, end: Time },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("{location}: {message}")]
    Invalid { location: String, message: String },

    #[error("{location}: {source}")]
    Located { location: String, source: Box<Error> },

    #[error("instance has no tasks")]
    EmptyInstance,

    #[error("oracle budget exceeded: {0}")]
    OracleBudget(String),

    #[error("schedule is malformed: {0}")]
    MalformedSchedule(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("generator parameters rejected: {0}")]
    Generator(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("document error: {0}")]
    Document(String),
}

impl Error {
    pub(crate) fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl Error {
    pub(crate) fn at(self, location: impl Into<String>) -> Self {
        Error::Located {
            location: location.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping location wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Located { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
