use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at position {index}")]
    NonFiniteValue { index: usize },

    #[error("series too short: need more than {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("transition count table is empty")]
    EmptyCounts,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("plug-in transfer entropy is negative beyond rounding ({0:e})")]
    NumericalInconsistency(f64),

    #[error("joint state space {alphabet}^{exponent} does not fit in 64 bits")]
    StateSpaceTooLarge { alphabet: usize, exponent: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("invalid bar on {date}: {message}")]
    InvariantViolation { date: NaiveDate, message: String },

    #[error("non-positive price on {date}")]
    NonPositivePrice { date: NaiveDate },

    #[error("value {value} on {date} outside [0, 100]")]
    ValueOutOfRange { date: NaiveDate, value: f64 },

    #[error("dates must be strictly increasing: {date} follows {previous}")]
    UnorderedDates {
        previous: NaiveDate,
        date: NaiveDate,
    },

    #[error("none of the keywords in set '{0}' has data")]
    NoConstituentData(String),

    #[error("keyword '{0}' appears more than once")]
    DuplicateKeyword(String),

    #[error("keyword set is empty")]
    EmptyKeywordSet,

    #[error("unknown keyword preset '{name}' (available: {available})")]
    UnknownPreset { name: String, available: String },

    #[error("series share no dates")]
    EmptyIntersection,

    #[error("window of {window_len} observations is below the minimum of {minimum}")]
    WindowTooSmall { window_len: usize, minimum: usize },

    #[error("invalid process spec: {0}")]
    InvalidSpec(String),

    #[error("no closed-form transfer entropy for {0}")]
    NoClosedForm(String),

    #[error("{}: {error}", path.display())]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialize(String),
}

impl Error {
    /// Whether the failure comes from the estimation procedure rather than
    /// from the shape or content of the input.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientData(_)
                | Error::NumericalInconsistency(_)
                | Error::StateSpaceTooLarge { .. }
                | Error::EmptyCounts
                | Error::NoClosedForm(_)
        )
    }

    /// Variant name, for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::SeriesTooShort { .. } => "SeriesTooShort",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::EmptyCounts => "EmptyCounts",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::NumericalInconsistency(_) => "NumericalInconsistency",
            Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            Error::InsufficientData(_) => "InsufficientData",
            Error::Parse { .. } => "ParseError",
            Error::InvariantViolation { .. } => "InvariantViolation",
            Error::NonPositivePrice { .. } => "NonPositivePrice",
            Error::ValueOutOfRange { .. } => "ValueOutOfRange",
            Error::UnorderedDates { .. } => "UnorderedDates",
            Error::NoConstituentData(_) => "NoConstituentData",
            Error::DuplicateKeyword(_) => "DuplicateKeyword",
            Error::EmptyKeywordSet => "EmptyKeywordSet",
            Error::UnknownPreset { .. } => "UnknownPreset",
            Error::EmptyIntersection => "EmptyIntersection",
            Error::WindowTooSmall { .. } => "WindowTooSmall",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::NoClosedForm(_) => "NoClosedForm",
            Error::Io { .. } => "IoError",
            Error::Serialize(_) => "SerializeError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, error: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            error,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
