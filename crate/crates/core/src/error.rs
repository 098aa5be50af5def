use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown bidding zone `{0}`")]
    UnknownZone(String),

    #[error("unknown plant `{0}`")]
    UnknownPlant(String),

    #[error("strike price undefined for plant `{plant}`: {reason}")]
    UndefinedStrike { plant: String, reason: String },

    #[error("ratio undefined: {0}")]
    UndefinedRatio(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dimension(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            expected,
            found,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
