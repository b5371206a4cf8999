use serde::{Deserialize, Serialize};

use crate::metrics::rouge1;
use crate::model::QaTriple;

/// Relevance of one reference to one question, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalLabel {
    pub question_id: String,
    pub question: String,
    pub reference_text: String,
    pub label: f64,
}

/// Labels every (question, reference) pair with the fraction of the
/// reference's tokens that the answer reuses: unigram precision with the
/// reference as candidate and the answer text as target.
pub fn build_retrieval_labels(corpus: &[QaTriple]) -> Vec<RetrievalLabel> {
    corpus
        .iter()
        .flat_map(|t| {
            let answer = t.answer.plain_text();
            t.references.iter().map(move |r| RetrievalLabel {
                question_id: t.question.id.clone(),
                question: t.question.text.clone(),
                reference_text: r.text.clone(),
                label: rouge1(&r.text, &answer).precision,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_answer_markup, references_from_texts, Question};

    fn triple(answer: &str, refs: &[&str]) -> QaTriple {
        QaTriple {
            question: Question::new("7", "what?").unwrap(),
            answer: parse_answer_markup(answer),
            references: references_from_texts(refs),
        }
    }

    #[test]
    fn label_direction() {
        let t = triple(
            "Solar panels convert sunlight into power quite well[1].",
            &["solar panels convert sunlight", "hydro dams store water"],
        );
        let labels = build_retrieval_labels(&[t]);
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].label, 1.0);
        assert_eq!(labels[1].label, 0.0);
        assert_eq!(labels[0].question_id, "7");
        // the other direction would score 4/8
        let swapped = rouge1(
            "Solar panels convert sunlight into power quite well",
            "solar panels convert sunlight",
        );
        assert_eq!(swapped.precision, 0.5);
    }
}
