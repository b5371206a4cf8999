use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("question text is empty")]
    EmptyQuestion,
    #[error("reference index {found} where {expected} was expected")]
    ReferenceIndex { expected: u32, found: u32 },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("search provider unreachable: {0}")]
    Unreachable(String),
    #[error("search provider quota exceeded")]
    QuotaExceeded,
    #[error("search provider returned an invalid response: {0}")]
    InvalidResponse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetrieveError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("no paragraphs survived fetch and extraction")]
    NoParagraphs,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("training set is empty")]
    Empty,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("generation timed out")]
    Timeout,
    #[error("generation rate limited")]
    RateLimited,
    #[error("model returned no text")]
    Refusal,
    #[error("llm backend unreachable: {0}")]
    Unreachable(String),
    #[error("llm backend is not configured")]
    Unconfigured,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreferenceError {
    #[error("not enough answers: need at least {required} per question")]
    NotEnoughAnswers { required: usize },
    #[error("no answers from other questions to sample negatives from")]
    NoNegativePool,
    #[error("raw scores have zero variance")]
    ZeroVariance,
    #[error("candidate list is empty")]
    NoCandidates,
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric undefined: {0}")]
    Undefined(&'static str),
    #[error("predicted and true lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {0} items")]
    TooFewItems(usize),
    #[error("item {item}: {metric} value {value} out of range")]
    OutOfRange {
        item: String,
        metric: String,
        value: String,
    },
    #[error("item {item}: {metric} may not be blank")]
    Blank { item: String, metric: String },
    #[error("ballot for {0} ranks a system twice")]
    DuplicateSystem(String),
    #[error("generation speed must be positive")]
    NonPositiveSpeed,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown {kind} `{name}`; known: {known}")]
    Unknown {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error("{kind} `{name}` requires an argument (`{name}:<arg>`)")]
    MissingArgument { kind: &'static str, name: String },
    #[error("{0}")]
    Load(String),
}
