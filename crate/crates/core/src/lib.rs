//! Web-enhanced question answering: retrieval, bootstrapped training data,
//! human-preference scoring and evaluation.

// Negated comparisons are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod clock;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod metrics;
pub mod model;
pub mod preference;
pub mod registry;
pub mod retriever;
pub mod synthetic;

pub use error::{
    FormatError, LlmError, MetricError, PreferenceError, RegistryError, RetrieveError, SearchError,
    TrainError,
};
pub use model::{Answer, AnswerSegment, QaTriple, Question, Reference};
