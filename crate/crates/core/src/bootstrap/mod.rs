//! Bootstrapped training data: prompt a model with retrieved references,
//! correct its citations and keep only well-grounded answers.

pub mod correct;
pub mod filter;
pub mod llm;
pub mod prompt;

use std::collections::BTreeMap;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::model::{QaTriple, Question, Reference};
use crate::retriever::Retriever;

pub use correct::{correct_answer, correct_citations, CitationCorrection, CorrectionMetric};
pub use filter::{filter_sample, DiscardReason, FilterConfig, FilterVerdict};
pub use llm::{GenerationParams, LlmCapabilities, LlmClient, StubLlmClient, StubMode};
pub use prompt::{build_prompt, PromptSpec, ReferencePosition, DEFAULT_INSTRUCTION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    pub filter: FilterConfig,
    pub instruction: String,
    pub use_demonstration: bool,
    pub reference_position: ReferencePosition,
    pub generation: GenerationParams,
    pub concurrency: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            filter: FilterConfig::default(),
            instruction: DEFAULT_INSTRUCTION.to_string(),
            use_demonstration: true,
            reference_position: ReferencePosition::default(),
            generation: GenerationParams::default(),
            concurrency: 4,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub total: usize,
    pub kept: usize,
    pub discarded: BTreeMap<String, usize>,
}

impl BootstrapReport {
    pub fn record(&mut self, outcome: Option<DiscardReason>) {
        self.total += 1;
        match outcome {
            None => self.kept += 1,
            Some(r) => *self.discarded.entry(r.to_string()).or_default() += 1,
        }
    }

    pub fn discarded_total(&self) -> usize {
        self.discarded.values().sum()
    }
}

impl BootstrapConfig {
    pub fn prompt_spec(&self, question: &Question, references: &[Reference]) -> PromptSpec {
        PromptSpec {
            instruction: self.instruction.clone(),
            demonstration: self.use_demonstration.then(prompt::default_demonstration),
            references: references.to_vec(),
            question: question.clone(),
            reference_position: self.reference_position,
        }
    }
}

/// Corrects and filters one raw triple. The returned triple carries the
/// corrected answer.
pub fn correct_and_filter(
    question: &Question,
    references: &[Reference],
    raw_answer: &crate::model::Answer,
    config: &FilterConfig,
) -> (QaTriple, FilterVerdict) {
    let c = correct::correct_parsed(
        raw_answer.clone(),
        references,
        config.correction_metric,
        config.correction_threshold,
    );
    let verdict = filter_sample(&c, references, config);
    let triple = QaTriple {
        question: question.clone(),
        answer: c.corrected,
        references: references.to_vec(),
    };
    (triple, verdict)
}

/// Filters already-generated triples (answers as written by the model).
pub fn filter_triples(
    triples: &[QaTriple],
    config: &FilterConfig,
) -> (Vec<QaTriple>, BootstrapReport) {
    let mut report = BootstrapReport::default();
    let mut kept = Vec::new();
    for t in triples {
        let (fixed, verdict) = correct_and_filter(&t.question, &t.references, &t.answer, config);
        report.record(verdict.reason);
        if verdict.keep() {
            kept.push(fixed);
        }
    }
    (kept, report)
}

async fn bootstrap_one(
    question: &Question,
    retriever: &Retriever,
    client: &dyn LlmClient,
    config: &BootstrapConfig,
) -> Result<QaTriple, DiscardReason> {
    let (refs, _) = retriever
        .timed_retrieve(question)
        .await
        .map_err(|_| DiscardReason::RetrievalError)?;
    let spec = config.prompt_spec(question, &refs);
    let raw = llm::generate_raw_answer(&spec, client, &config.generation)
        .await
        .map_err(|_| DiscardReason::GenerationError)?;
    let parsed = crate::model::parse_answer_markup(&raw);
    let (triple, verdict) = correct_and_filter(question, &refs, &parsed, &config.filter);
    match verdict.reason {
        None => Ok(triple),
        Some(r) => Err(r),
    }
}

/// Retrieves, generates, corrects and filters every question. Kept triples
/// come back in input order. Clients that are not safe for concurrent use are
/// driven one request at a time.
pub async fn bootstrap_dataset(
    questions: &[Question],
    retriever: &Retriever,
    client: &dyn LlmClient,
    config: &BootstrapConfig,
) -> (Vec<QaTriple>, BootstrapReport) {
    let width = if client.capabilities().concurrent {
        config.concurrency.max(1)
    } else {
        1
    };
    let outcomes: Vec<_> = stream::iter(questions)
        .map(|q| bootstrap_one(q, retriever, client, config))
        .buffered(width)
        .collect()
        .await;
    let mut report = BootstrapReport::default();
    let mut kept = Vec::new();
    for o in outcomes {
        match o {
            Ok(t) => {
                report.record(None);
                kept.push(t);
            }
            Err(r) => report.record(Some(r)),
        }
    }
    (kept, report)
}
