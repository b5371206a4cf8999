//! One-shot prompt layout for quoted long-form answers.

use serde::{Deserialize, Serialize};

use crate::model::{
    parse_answer_markup, references_from_texts, render_answer, QaTriple, Question, Reference,
};

pub const DEFAULT_INSTRUCTION: &str =
    "Read the references provided and answer the corresponding question.";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePosition {
    #[default]
    BeforeQuestion,
    AfterQuestion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    pub instruction: String,
    pub demonstration: Option<QaTriple>,
    pub references: Vec<Reference>,
    pub question: Question,
    pub reference_position: ReferencePosition,
}

impl PromptSpec {
    pub fn new(question: Question, references: Vec<Reference>) -> Self {
        Self {
            instruction: DEFAULT_INSTRUCTION.to_string(),
            demonstration: None,
            references,
            question,
            reference_position: ReferencePosition::default(),
        }
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn block(
    out: &mut String,
    refs: &[Reference],
    question: &Question,
    answer: Option<&str>,
    position: ReferencePosition,
) {
    let ref_lines = || {
        refs.iter()
            .map(|r| format!("[{}] {}\n", r.index, one_line(&r.text)))
            .collect::<String>()
    };
    let q_line = format!("Question: {}\n", one_line(&question.text));
    match position {
        ReferencePosition::BeforeQuestion => {
            out.push_str(&ref_lines());
            out.push_str(&q_line);
        }
        ReferencePosition::AfterQuestion => {
            out.push_str(&q_line);
            out.push_str(&ref_lines());
        }
    }
    match answer {
        Some(a) => {
            out.push_str("Answer: ");
            out.push_str(a);
            out.push('\n');
        }
        None => out.push_str("Answer:"),
    }
}

/// Instruction, optional worked demonstration, then the target references,
/// question and an open `Answer:` slot. Blocks are separated by blank lines;
/// every reference is one `[i] text` line.
pub fn build_prompt(spec: &PromptSpec) -> String {
    let mut out = String::new();
    if !spec.instruction.trim().is_empty() {
        out.push_str(spec.instruction.trim());
        out.push_str("\n\n");
    }
    if let Some(demo) = &spec.demonstration {
        let answer = render_answer(&demo.answer);
        block(
            &mut out,
            &demo.references,
            &demo.question,
            Some(&answer),
            spec.reference_position,
        );
        out.push('\n');
    }
    block(
        &mut out,
        &spec.references,
        &spec.question,
        None,
        spec.reference_position,
    );
    out
}

/// A small hand-written demonstration. The last reference is deliberately
/// irrelevant and uncited.
pub fn default_demonstration() -> QaTriple {
    QaTriple {
        question: Question::new("demo", "Why do ships float even though they are made of steel?")
            .expect("non-empty"),
        answer: parse_answer_markup(
            "A ship floats because its hull displaces a weight of water equal to its own weight[1]. \
             The hull encloses a large volume of air, so the average density of the ship is lower than the density of water[1][2]. \
             If the hull is breached and fills with water, that average density rises and the ship sinks[2].",
        ),
        references: references_from_texts(&[
            "An object floats when it displaces a weight of water equal to its own weight; a steel hull shaped like a bowl displaces a great deal of water.",
            "Because a hull is mostly air, the average density of the ship is lower than that of water. Flooding raises the average density until the ship sinks.",
            "The first steel ships were built in the nineteenth century in British shipyards.",
        ]),
    }
}

/// Reads the target references and question back out of a prompt built by
/// [`build_prompt`]. Used by deterministic stub models.
pub fn parse_prompt_target(prompt: &str) -> (Vec<Reference>, Option<String>) {
    let target = prompt.rsplit("\n\n").next().unwrap_or(prompt);
    let mut refs = Vec::new();
    let mut question = None;
    for line in target.lines() {
        if let Some(q) = line.strip_prefix("Question: ") {
            question = Some(q.to_string());
        } else if let Some(rest) = line.strip_prefix('[') {
            if let Some((idx, text)) = rest.split_once("] ") {
                if let Ok(i) = idx.parse::<u32>() {
                    refs.push(Reference::new(i, text, ""));
                }
            }
        }
    }
    (refs, question)
}
