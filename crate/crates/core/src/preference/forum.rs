//! Forum answers with thumb-up counts, turned into comparison pairs.

use serde::{Deserialize, Serialize};

use crate::error::FormatError;
use crate::metrics::token_spans;
use crate::model::read_jsonl;

pub const MIN_THUMB_UPS_EXCLUSIVE: u32 = 3;
pub const MIN_GROUP_SIZE: usize = 8;
pub const MIN_RANK_GAP_EXCLUSIVE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForumAnswer {
    pub question_id: String,
    #[serde(default)]
    pub question: String,
    #[serde(rename = "answer")]
    pub text: String,
    pub thumb_ups: u32,
    #[serde(default)]
    pub token_length: usize,
}

impl ForumAnswer {
    pub fn new(
        question_id: impl Into<String>,
        question: impl Into<String>,
        text: impl Into<String>,
        thumb_ups: u32,
    ) -> Self {
        let text = text.into();
        Self {
            question_id: question_id.into(),
            question: question.into(),
            token_length: token_spans(&text).len(),
            text,
            thumb_ups,
        }
    }

    /// Keeps the first `n` tokens and whatever precedes them.
    pub fn truncated(&self, n: usize) -> Self {
        let spans = token_spans(&self.text);
        if spans.len() <= n {
            return self.clone();
        }
        let end = if n == 0 { 0 } else { spans[n - 1].end };
        Self {
            text: self.text[..end].to_string(),
            token_length: n,
            ..self.clone()
        }
    }
}

/// Reads `{"question_id","question","answer","thumb_ups"}` lines; token
/// lengths are always recomputed.
pub fn read_forum(input: &str) -> Result<Vec<ForumAnswer>, FormatError> {
    let mut answers: Vec<ForumAnswer> = read_jsonl(input)?;
    for a in &mut answers {
        a.token_length = token_spans(&a.text).len();
    }
    Ok(answers)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerGroup {
    pub question_id: String,
    pub question: String,
    pub answers: Vec<ForumAnswer>,
}

/// Groups by question id in order of first appearance.
pub fn group_by_question(answers: &[ForumAnswer]) -> Vec<AnswerGroup> {
    let mut groups: Vec<AnswerGroup> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for a in answers {
        let slot = *index.entry(a.question_id.clone()).or_insert_with(|| {
            groups.push(AnswerGroup {
                question_id: a.question_id.clone(),
                question: a.question.clone(),
                answers: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].answers.push(a.clone());
    }
    groups
}

/// Drops answers with three or fewer thumb-ups, then groups left with fewer
/// than eight answers.
pub fn qualify_questions(groups: &[AnswerGroup]) -> Vec<AnswerGroup> {
    groups
        .iter()
        .filter_map(|g| {
            let answers: Vec<ForumAnswer> = g
                .answers
                .iter()
                .filter(|a| a.thumb_ups > MIN_THUMB_UPS_EXCLUSIVE)
                .cloned()
                .collect();
            (answers.len() >= MIN_GROUP_SIZE).then(|| AnswerGroup {
                answers,
                ..g.clone()
            })
        })
        .collect()
}

/// Lower median of the group's token lengths.
pub fn median_length(group: &AnswerGroup) -> usize {
    let mut lens: Vec<usize> = group.answers.iter().map(|a| a.token_length).collect();
    lens.sort_unstable();
    if lens.is_empty() {
        0
    } else {
        lens[(lens.len() - 1) / 2]
    }
}

/// Truncates answers longer than the median length `x` to `x` tokens and
/// drops those shorter than `x / 2`.
pub fn mitigate_length_bias(group: &AnswerGroup) -> AnswerGroup {
    let x = median_length(group);
    let answers = group
        .answers
        .iter()
        .filter(|a| 2 * a.token_length >= x)
        .map(|a| if a.token_length > x { a.truncated(x) } else { a.clone() })
        .collect();
    AnswerGroup {
        answers,
        ..group.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonPair {
    pub question_id: String,
    #[serde(default)]
    pub question: String,
    pub better: ForumAnswer,
    pub worse: ForumAnswer,
}

/// On-disk pair line: answer texts only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub question_id: String,
    #[serde(default)]
    pub question: String,
    pub better: String,
    pub worse: String,
}

impl From<&ComparisonPair> for PairRecord {
    fn from(p: &ComparisonPair) -> Self {
        Self {
            question_id: p.question_id.clone(),
            question: p.question.clone(),
            better: p.better.text.clone(),
            worse: p.worse.text.clone(),
        }
    }
}

impl PairRecord {
    /// Thumb-up counts are not stored; both sides get zero.
    pub fn into_pair(self) -> ComparisonPair {
        let side = |text: String| ForumAnswer::new(&self.question_id, &self.question, text, 0);
        ComparisonPair {
            better: side(self.better.clone()),
            worse: side(self.worse.clone()),
            question_id: self.question_id,
            question: self.question,
        }
    }
}

/// Answers ordered best first: more thumb-ups, then longer, then input order.
pub fn rank_answers(group: &AnswerGroup) -> Vec<&ForumAnswer> {
    let mut ranked: Vec<&ForumAnswer> = group.answers.iter().collect();
    ranked.sort_by(|a, b| {
        b.thumb_ups
            .cmp(&a.thumb_ups)
            .then(b.token_length.cmp(&a.token_length))
    });
    ranked
}

/// Every pair more than five rank positions apart. Pairs whose thumb-up
/// counts are equal carry no preference and are skipped.
pub fn build_contrast_pairs(group: &AnswerGroup) -> Vec<ComparisonPair> {
    let ranked = rank_answers(group);
    let n = ranked.len();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + MIN_RANK_GAP_EXCLUSIVE + 1)..n {
            if ranked[i].thumb_ups > ranked[j].thumb_ups {
                pairs.push(ComparisonPair {
                    question_id: group.question_id.clone(),
                    question: group.question.clone(),
                    better: ranked[i].clone(),
                    worse: ranked[j].clone(),
                });
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PreferenceStats {
    pub answers: usize,
    pub questions: usize,
    pub qualified_questions: usize,
    /// Qualified groups still holding enough answers after length mitigation.
    pub paired_questions: usize,
    pub pairs: usize,
}

/// Qualification, length-bias mitigation and contrast pairing. A group that
/// falls below the minimum size after mitigation yields no pairs.
pub fn build_preference_pairs(answers: &[ForumAnswer]) -> (Vec<ComparisonPair>, PreferenceStats) {
    let groups = group_by_question(answers);
    let qualified = qualify_questions(&groups);
    let mut stats = PreferenceStats {
        answers: answers.len(),
        questions: groups.len(),
        qualified_questions: qualified.len(),
        ..Default::default()
    };
    let mut pairs = Vec::new();
    for g in &qualified {
        let m = mitigate_length_bias(g);
        if m.answers.len() < MIN_GROUP_SIZE {
            continue;
        }
        stats.paired_questions += 1;
        pairs.extend(build_contrast_pairs(&m));
    }
    stats.pairs = pairs.len();
    (pairs, stats)
}
