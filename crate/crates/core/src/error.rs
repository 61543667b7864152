use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("transition {transition} is not enabled")]
    NotEnabled { transition: String },

    /// A firing would put a second token in a place of a safe net.
    #[error("firing {transition} from state {state} puts two tokens in place {place}")]
    SafenessViolation {
        state: String,
        transition: String,
        place: String,
    },

    #[error("state space exceeds the limit of {limit} states")]
    StateLimitExceeded { limit: usize },

    #[error("marking has no marked place")]
    EmptySupport,

    #[error("unknown place {0}")]
    UnknownPlace(String),

    #[error("the initial marking is forbidden; no controller exists")]
    InitialStateForbidden,

    /// Every over-state of this border state is also an over-state of an
    /// authorized state, so no over-state constraint can separate it.
    #[error("border state {0} cannot be separated from the authorized states")]
    Uncoverable(String),

    #[error("{what} needs {needed} subsets, above the cap of {cap}")]
    CombinatorialLimit {
        what: String,
        needed: u128,
        cap: u64,
    },

    #[error("initial marking violates constraint {0}")]
    InitialViolation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid net: {0}")]
    InvalidNet(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("duplicate id {0}")]
    DuplicateId(String),

    #[error("arc {from} -> {to} has weight {weight}; only unit weights are supported")]
    NonUnitWeight {
        from: String,
        to: String,
        weight: u64,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable name of the variant, used in machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotEnabled { .. } => "NotEnabled",
            Error::SafenessViolation { .. } => "SafenessViolation",
            Error::StateLimitExceeded { .. } => "StateLimitExceeded",
            Error::EmptySupport => "EmptySupport",
            Error::UnknownPlace(_) => "UnknownPlace",
            Error::InitialStateForbidden => "InitialStateForbidden",
            Error::Uncoverable(_) => "Uncoverable",
            Error::CombinatorialLimit { .. } => "CombinatorialLimit",
            Error::InitialViolation(_) => "InitialViolation",
            Error::Precondition(_) => "Precondition",
            Error::InvalidNet(_) => "InvalidNet",
            Error::Parse(_) => "ParseError",
            Error::DuplicateId(_) => "DuplicateId",
            Error::NonUnitWeight { .. } => "NonUnitWeight",
            Error::Io(_) => "Io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
