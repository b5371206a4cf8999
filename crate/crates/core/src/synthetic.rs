//! Seeded synthetic datasets with known structure, for tests and demos.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{references_from_texts, Answer, AnswerSegment, QaTriple, Question};
use crate::preference::forum::{ComparisonPair, ForumAnswer};

fn filler(rng: &mut ChaCha8Rng, n: usize) -> String {
    const WORDS: [&str; 16] = [
        "the", "it", "because", "when", "often", "water", "light", "people", "time",
        "usually", "more", "less", "which", "this", "that", "so",
    ];
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Forum answers grouped by question. Group sizes span 1..=24, thumb-up
/// counts are distinct within a group, lengths span 3..=240 tokens.
pub fn forum_answers(n: usize, seed: u64) -> Vec<ForumAnswer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut q = 0;
    while out.len() < n {
        q += 1;
        let size = rng.random_range(1..=24).min(n - out.len());
        let mut thumbs: Vec<u32> = (0..80).collect();
        thumbs.shuffle(&mut rng);
        let qid = format!("q{q}");
        let question = format!("synthetic question number {q}");
        for &t in thumbs.iter().take(size) {
            let len = rng.random_range(3..=240);
            out.push(ForumAnswer::new(&qid, &question, filler(&mut rng, len), t));
        }
    }
    out
}

/// Pairs whose better side contains `good` words and worse side `bad`
/// words, padded with shared filler.
pub fn separable_pairs(n: usize, seed: u64) -> Vec<ComparisonPair> {
    const GOOD: [&str; 6] = ["clear", "accurate", "sourced", "thorough", "helpful", "precise"];
    const BAD: [&str; 6] = ["wrong", "vague", "rude", "unsourced", "confusing", "sloppy"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = |words: &[&str], rng: &mut ChaCha8Rng| {
        let mut parts: Vec<String> = (0..rng.random_range(2..=4))
            .map(|_| words.choose(rng).expect("non-empty").to_string())
            .collect();
        let len = rng.random_range(4..=20);
        parts.push(filler(rng, len));
        parts.shuffle(rng);
        parts.join(" ")
    };
    (0..n)
        .map(|i| {
            let qid = format!("s{i}");
            let question = format!("question {}", filler(&mut rng, 4));
            let better = side(&GOOD, &mut rng);
            let worse = side(&BAD, &mut rng);
            ComparisonPair {
                better: ForumAnswer::new(&qid, &question, better, 10),
                worse: ForumAnswer::new(&qid, &question, worse, 4),
                question_id: qid,
                question,
            }
        })
        .collect()
}

/// Question `q` of topic `t` uses words `t{t}q*`, its references words
/// `t{t}r*`; the two vocabularies are disjoint, so lexical overlap between
/// question and reference carries no signal. Each triple has two on-topic
/// references (quoted by the answer) and three off-topic ones.
pub fn retrieval_triples(topics: usize, per_topic: usize, seed: u64) -> Vec<QaTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = |t: usize, kind: char, k: usize, rng: &mut ChaCha8Rng| -> String {
        (0..k)
            .map(|_| format!("t{t}{kind}{}", rng.random_range(0..10)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = Vec::new();
    for i in 0..topics * per_topic {
        let t = i % topics;
        let question = words(t, 'q', 3, &mut rng);
        let mut refs: Vec<(bool, String)> = (0..2)
            .map(|_| (true, words(t, 'r', 6, &mut rng)))
            .collect();
        for _ in 0..3 {
            let mut o = rng.random_range(0..topics - 1);
            if o >= t {
                o += 1;
            }
            refs.push((false, words(o, 'r', 6, &mut rng)));
        }
        refs.shuffle(&mut rng);
        let references = references_from_texts(&refs.iter().map(|r| r.1.clone()).collect::<Vec<_>>());
        let segments = refs
            .iter()
            .zip(&references)
            .filter(|(r, _)| r.0)
            .map(|(r, rf)| AnswerSegment::new(format!("{}. ", r.1), [rf.index]))
            .collect();
        out.push(QaTriple {
            question: Question::new(format!("r{i}"), question).expect("non-empty"),
            answer: Answer::new(segments),
            references,
        });
    }
    out
}
