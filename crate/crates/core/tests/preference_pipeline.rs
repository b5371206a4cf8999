use proptest::prelude::*;
use webglm_core::preference::forum::{
    build_contrast_pairs, build_preference_pairs, group_by_question, median_length,
    mitigate_length_bias, qualify_questions, AnswerGroup, ForumAnswer, MIN_GROUP_SIZE,
};
use webglm_core::preference::scorer::{
    calibrate_scorer, encode_pairs, pairwise_gradient, pairwise_objective, train_scorer,
    LogisticLoss, MarginLoss, PairwiseLoss, Scorer, ScorerTrainConfig,
};
use webglm_core::synthetic::{forum_answers, separable_pairs};

fn closed_form(n: usize) -> usize {
    (1..=n).map(|i| n.saturating_sub(i + 5)).sum()
}

fn untied_group(n: usize) -> AnswerGroup {
    AnswerGroup {
        question_id: "q".into(),
        question: String::new(),
        answers: (0..n)
            .map(|i| ForumAnswer::new("q", "", "same length text", 100 - i as u32))
            .collect(),
    }
}

#[test]
fn pair_count_closed_form_small_groups() {
    for n in 0..40 {
        assert_eq!(build_contrast_pairs(&untied_group(n)).len(), closed_form(n), "n = {n}");
    }
}

#[test]
fn synthetic_forum_pipeline_properties() {
    let answers = forum_answers(10_000, 42);
    let (pairs, stats) = build_preference_pairs(&answers);
    assert!(stats.pairs > 0);

    // recompute each surviving group independently
    let groups = qualify_questions(&group_by_question(&answers));
    let mut expected = 0;
    for g in &groups {
        let x = median_length(g);
        let m = mitigate_length_bias(g);
        if m.answers.len() < MIN_GROUP_SIZE {
            continue;
        }
        expected += closed_form(m.answers.len());
        let lo = x.div_ceil(2);
        for p in pairs.iter().filter(|p| p.question_id == g.question_id) {
            assert!(p.better.thumb_ups > p.worse.thumb_ups);
            assert!(p.worse.thumb_ups > 3);
            for side in [&p.better, &p.worse] {
                assert!((lo..=x).contains(&side.token_length), "{} not in [{lo}, {x}]", side.token_length);
            }
        }
    }
    assert_eq!(pairs.len(), expected);
    let again = build_preference_pairs(&answers);
    assert_eq!(again.0, pairs);
}

fn small_pairs() -> Vec<webglm_core::preference::ComparisonPair> {
    separable_pairs(12, 5)
}

#[test]
fn scorer_gradient_matches_finite_differences() {
    let fs = 128;
    let diffs = encode_pairs(&small_pairs(), fs);
    let mut w = vec![0.0; fs + 2];
    // arbitrary non-zero point
    for (i, v) in w.iter_mut().enumerate() {
        *v = ((i * 37 % 11) as f64 - 5.0) / 10.0;
    }
    let losses: [&dyn PairwiseLoss; 2] = [&LogisticLoss, &MarginLoss { margin: 1.0 }];
    for loss in losses {
        let g = pairwise_gradient(&w, &diffs, loss);
        let mut idx: Vec<usize> = (0..g.len()).filter(|&i| g[i] != 0.0).collect();
        idx.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
        let h = 1e-6;
        for &i in idx.iter().take(20) {
            let mut p = w.clone();
            p[i] += h;
            let mut m = w.clone();
            m[i] -= h;
            let fd = (pairwise_objective(&p, &diffs, loss) - pairwise_objective(&m, &diffs, loss)) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(1e-12);
            assert!(rel < 1e-4, "{} w[{i}]: analytic {} numeric {fd}", loss.name(), g[i]);
        }
    }
}

#[test]
fn separable_pairs_are_learned() {
    let train = separable_pairs(400, 1);
    let test = separable_pairs(200, 2);
    let s = train_scorer(&train, &ScorerTrainConfig::default()).unwrap();
    let acc = test
        .iter()
        .filter(|p| s.raw_score(&p.question, &p.better.text) > s.raw_score(&p.question, &p.worse.text))
        .count() as f64
        / test.len() as f64;
    assert!(acc >= 0.95, "{acc}");
}

#[test]
fn calibration_standardizes_training_scores() {
    let train = separable_pairs(100, 3);
    let s = train_scorer(&train, &ScorerTrainConfig { epochs: 5, ..Default::default() }).unwrap();
    let answers: Vec<(String, String)> = train
        .iter()
        .flat_map(|p| [(p.question.clone(), p.better.text.clone()), (p.question.clone(), p.worse.text.clone())])
        .collect();
    let cal = calibrate_scorer(&s, &answers).unwrap();
    let z: Vec<f64> = answers.iter().map(|(q, a)| cal.score_text(q, a)).collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let std = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64).sqrt();
    assert!(mean.abs() < 1e-9, "{mean}");
    assert!((std - 1.0).abs() < 1e-9, "{std}");
    assert!(calibrate_scorer(&Scorer::zeros(8), &answers).is_err());
}

#[test]
fn training_beats_zero_scorer_on_its_pairs() {
    let train = separable_pairs(50, 8);
    let s = train_scorer(&train, &ScorerTrainConfig { epochs: 3, ..Default::default() }).unwrap();
    let acc = train
        .iter()
        .map(|p| {
            let d = s.raw_score(&p.question, &p.better.text) - s.raw_score(&p.question, &p.worse.text);
            if d > 0.0 { 1.0 } else if d == 0.0 { 0.5 } else { 0.0 }
        })
        .sum::<f64>()
        / train.len() as f64;
    assert!(acc >= 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contrast_pairs_match_enumeration(thumbs in proptest::collection::vec(0u32..30, 0..20)) {
        let g = AnswerGroup {
            question_id: "q".into(),
            question: String::new(),
            answers: thumbs.iter().enumerate().map(|(i, &t)| ForumAnswer::new("q", "", "w ".repeat(i % 3 + 1), t)).collect(),
        };
        let pairs = build_contrast_pairs(&g);
        // independent enumeration over the ranked list
        let mut ranked: Vec<&ForumAnswer> = g.answers.iter().collect();
        ranked.sort_by(|a, b| b.thumb_ups.cmp(&a.thumb_ups).then(b.token_length.cmp(&a.token_length)));
        let mut expected = 0;
        for i in 0..ranked.len() {
            for j in 0..ranked.len() {
                if j > i + 5 && ranked[i].thumb_ups != ranked[j].thumb_ups {
                    expected += 1;
                }
            }
        }
        prop_assert_eq!(pairs.len(), expected);
        for p in &pairs {
            prop_assert!(p.better.thumb_ups > p.worse.thumb_ups);
        }
    }

    #[test]
    fn mitigation_bounds(lens in proptest::collection::vec(1usize..60, 1..15)) {
        let g = AnswerGroup {
            question_id: "q".into(),
            question: String::new(),
            answers: lens.iter().map(|&l| ForumAnswer::new("q", "", "tok ".repeat(l), 5)).collect(),
        };
        let x = median_length(&g);
        let m = mitigate_length_bias(&g);
        for a in &m.answers {
            prop_assert!(a.token_length <= x && 2 * a.token_length >= x);
            prop_assert_eq!(webglm_core::metrics::tokenize(&a.text).len(), a.token_length);
        }
        prop_assert_eq!(m.answers.len(), lens.iter().filter(|&&l| 2 * l >= x).count());
    }
}
