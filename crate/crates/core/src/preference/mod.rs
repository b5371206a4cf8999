//! Human-preference scoring: forum thumb-ups become comparison pairs that
//! train a scorer used to pick the best of several candidate answers.

pub mod baseline;
pub mod forum;
pub mod scorer;

pub use baseline::{build_baseline_labels, BaselineMode, LabeledAnswer};
pub use forum::{
    build_contrast_pairs, build_preference_pairs, group_by_question, mitigate_length_bias,
    qualify_questions, read_forum, AnswerGroup, ComparisonPair, ForumAnswer, PairRecord, PreferenceStats,
};
pub use scorer::{
    best_of_n, calibrate_scorer, scorer_registry, train_scorer, AnswerScorer, Scorer,
    ScorerTrainConfig, StubScorer,
};
