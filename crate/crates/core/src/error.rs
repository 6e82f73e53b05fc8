use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can surface.
///
/// Variant names double as the stable machine-readable error codes shared
/// by the CLI, the HTTP API and the C ABI (see [`Error::code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("agent `{0}` is already registered")]
    DuplicateAgent(String),
    #[error("no agent named `{0}`")]
    UnknownRecipient(String),
    #[error("step budget of {max_steps} exhausted with {pending} message(s) still queued")]
    StepBudgetExceeded { max_steps: u64, pending: usize },

    #[error("fetching `{uri}` failed: {reason}")]
    FetchFailed { uri: String, reason: String },
    #[error("frame sequence is empty")]
    EmptyFrames,
    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("training needs at least two distinct concepts, found {0}")]
    InsufficientClasses(usize),
    #[error("no training examples")]
    EmptyTrainingSet,
    #[error("no evaluation examples")]
    EmptyEvaluationSet,
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("classifier model has not been trained")]
    ModelMissing,

    #[error("document `{0}` already stored")]
    DuplicateDocument(String),
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("rating {0} outside 0..=5")]
    InvalidRating(i64),
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt store: {0}")]
    CorruptStore(String),

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),
    #[error("stage performance {value} for `{stage}` outside [0, 1]")]
    OutOfRangePerformance { stage: String, value: f64 },

    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("user `{0}` already has an avatar")]
    DuplicateUser(String),
    #[error("unknown community `{0}`")]
    UnknownCommunity(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable error code, identical to the variant name.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DuplicateAgent(_) => "DuplicateAgent",
            Error::UnknownRecipient(_) => "UnknownRecipient",
            Error::StepBudgetExceeded { .. } => "StepBudgetExceeded",
            Error::FetchFailed { .. } => "FetchFailed",
            Error::EmptyFrames => "EmptyFrames",
            Error::InvalidDescriptor(_) => "InvalidDescriptor",
            Error::InsufficientClasses(_) => "InsufficientClasses",
            Error::EmptyTrainingSet => "EmptyTrainingSet",
            Error::EmptyEvaluationSet => "EmptyEvaluationSet",
            Error::UnknownConcept(_) => "UnknownConcept",
            Error::ModelMissing => "ModelMissing",
            Error::DuplicateDocument(_) => "DuplicateDocument",
            Error::UnknownDocument(_) => "UnknownDocument",
            Error::InvalidRating(_) => "InvalidRating",
            Error::IoFailure { .. } => "IoFailure",
            Error::CorruptStore(_) => "CorruptStore",
            Error::UnknownDomain(_) => "UnknownDomain",
            Error::OutOfRangePerformance { .. } => "OutOfRangePerformance",
            Error::UnknownUser(_) => "UnknownUser",
            Error::DuplicateUser(_) => "DuplicateUser",
            Error::UnknownCommunity(_) => "UnknownCommunity",
            Error::UnknownStrategy(_) => "UnknownStrategy",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}
