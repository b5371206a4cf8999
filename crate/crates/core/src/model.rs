//! Questions, references and citation-segmented answers.
//!
//! An answer is an ordered list of segments, each a span of quoted text
//! followed by the set of references it cites. The textual markup form is
//! `text[1][2] more text[3].`; both `[1][2]` and `[1, 2]` are accepted on
//! input, only `[1][2]` is emitted.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::FormatError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
}

impl Question {
    /// Fails when `text` is empty after trimming.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self, FormatError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(FormatError::EmptyQuestion);
        }
        Ok(Self { id: id.into(), text })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// 1-based position in the reference list.
    pub index: u32,
    pub text: String,
    #[serde(default)]
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl Reference {
    pub fn new(index: u32, text: impl Into<String>, url: impl Into<String>) -> Self {
        Self {
            index,
            text: text.into(),
            url: url.into(),
            score: None,
        }
    }
}

/// Builds a consecutively indexed reference list from plain texts.
pub fn references_from_texts<S: AsRef<str>>(texts: &[S]) -> Vec<Reference> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| Reference::new(i as u32 + 1, t.as_ref(), ""))
        .collect()
}

/// Checks that indices run 1..n with no gaps.
pub fn check_reference_indices(refs: &[Reference]) -> Result<(), FormatError> {
    for (pos, r) in refs.iter().enumerate() {
        let expected = pos as u32 + 1;
        if r.index != expected {
            return Err(FormatError::ReferenceIndex {
                expected,
                found: r.index,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSegment {
    pub text: String,
    pub citations: BTreeSet<u32>,
}

impl AnswerSegment {
    pub fn new(text: impl Into<String>, citations: impl IntoIterator<Item = u32>) -> Self {
        Self {
            text: text.into(),
            citations: citations.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub segments: Vec<AnswerSegment>,
}

impl Answer {
    pub fn new(segments: Vec<AnswerSegment>) -> Self {
        Self { segments }
    }

    /// Concatenated segment texts without citation marks.
    pub fn plain_text(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    /// Every distinct cited index, ascending.
    pub fn distinct_citations(&self) -> BTreeSet<u32> {
        self.segments
            .iter()
            .flat_map(|s| s.citations.iter().copied())
            .collect()
    }

    pub fn citation_count(&self) -> usize {
        self.segments.iter().map(|s| s.citations.len()).sum()
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_answer(self))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QaTriple {
    pub question: Question,
    pub answer: Answer,
    pub references: Vec<Reference>,
}

impl QaTriple {
    pub fn invalid_citations(&self) -> Vec<u32> {
        validate_citations(&self.answer, self.references.len())
    }
}

fn is_sentence_final(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Tries to read one citation mark starting at byte `start` (which must be
/// `[`). Returns the indices and the byte offset just past `]`.
fn scan_mark(raw: &str, start: usize) -> Option<(Vec<u32>, usize)> {
    let rest = &raw[start..];
    debug_assert!(rest.starts_with('['));
    let close = rest.find(']')?;
    let inner = &rest[1..close];
    let mut out = Vec::new();
    for part in inner.split(',') {
        let part = part.trim();
        if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        out.push(part.parse::<u32>().ok()?);
    }
    Some((out, start + close + 1))
}

/// Splits citation-marked text into segments.
///
/// Each maximal run of adjacent marks closes the current segment and becomes
/// its citation set. Sentence-final punctuation directly after a run binds to
/// the segment the run closes. Bracketed content that is not a list of
/// integers stays in the text.
pub fn parse_answer_markup(raw: &str) -> Answer {
    let mut segments = Vec::new();
    let mut text = String::new();
    let mut pos = 0;
    while pos < raw.len() {
        let rest = &raw[pos..];
        if rest.starts_with('[') {
            if let Some((first, mut end)) = scan_mark(raw, pos) {
                let mut cites: BTreeSet<u32> = first.into_iter().collect();
                while raw[end..].starts_with('[') {
                    match scan_mark(raw, end) {
                        Some((more, next)) => {
                            cites.extend(more);
                            end = next;
                        }
                        None => break,
                    }
                }
                for c in raw[end..].chars() {
                    if !is_sentence_final(c) {
                        break;
                    }
                    text.push(c);
                    end += c.len_utf8();
                }
                segments.push(AnswerSegment {
                    text: std::mem::take(&mut text),
                    citations: cites,
                });
                pos = end;
                continue;
            }
        }
        let c = rest.chars().next().expect("non-empty remainder");
        text.push(c);
        pos += c.len_utf8();
    }
    if !text.is_empty() {
        segments.push(AnswerSegment {
            text,
            citations: BTreeSet::new(),
        });
    }
    Answer { segments }
}

/// Canonical markup: each segment's text followed by `[i]` marks ascending.
pub fn render_answer(answer: &Answer) -> String {
    let mut out = String::new();
    for seg in &answer.segments {
        out.push_str(&seg.text);
        for c in &seg.citations {
            out.push('[');
            out.push_str(&c.to_string());
            out.push(']');
        }
    }
    out
}

/// Cited indices outside `1..=n_refs`, deduplicated and ascending.
pub fn validate_citations(answer: &Answer, n_refs: usize) -> Vec<u32> {
    answer
        .distinct_citations()
        .into_iter()
        .filter(|&c| c == 0 || c as usize > n_refs)
        .collect()
}

/// On-disk line format for question/answer/reference triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleRecord {
    pub question: String,
    pub answer: String,
    pub references: Vec<ReferenceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub index: u32,
    pub text: String,
    #[serde(default)]
    pub url: String,
}

impl TripleRecord {
    pub fn from_triple(t: &QaTriple) -> Self {
        Self {
            question: t.question.text.clone(),
            answer: render_answer(&t.answer),
            references: t
                .references
                .iter()
                .map(|r| ReferenceRecord {
                    index: r.index,
                    text: r.text.clone(),
                    url: r.url.clone(),
                })
                .collect(),
        }
    }

    /// The raw answer markup is parsed but not validated against the
    /// references; callers decide how to treat bad citations.
    pub fn into_triple(self, id: impl Into<String>) -> Result<QaTriple, FormatError> {
        let question = Question::new(id, self.question)?;
        let references: Vec<Reference> = self
            .references
            .into_iter()
            .map(|r| Reference {
                index: r.index,
                text: r.text,
                url: r.url,
                score: None,
            })
            .collect();
        check_reference_indices(&references)?;
        Ok(QaTriple {
            question,
            answer: parse_answer_markup(&self.answer),
            references,
        })
    }
}

/// Serializes one triple as a single JSON line (no trailing newline).
pub fn triple_to_json_line(t: &QaTriple) -> String {
    serde_json::to_string(&TripleRecord::from_triple(t)).expect("triple record serializes")
}

/// Parses a JSON-lines corpus. Question ids are the 1-based line numbers.
/// Parses one JSON value per non-blank line, reporting 1-based line numbers.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(input: &str) -> Result<Vec<T>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| FormatError::Line {
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn read_triples(input: &str) -> Result<Vec<QaTriple>, FormatError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TripleRecord = serde_json::from_str(line).map_err(|e| FormatError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        let triple = rec.into_triple(line_no.to_string()).map_err(|e| FormatError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(triple);
    }
    Ok(out)
}
