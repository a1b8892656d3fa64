//! Property tests for the text metrics, each checked against an
//! independently written oracle or a structural invariant.

use std::collections::HashSet;

use mrprio_core::analyzers::{
    fit_tfidf, levenshtein, tokenize, Emotion, HashedEmbedding, KeywordTone, LexiconSentiment, ToneDistribution,
};
use mrprio_core::diversity::{
    cosine_diversity, lexical_diversity, ner_diversity, semantic_diversity, sentiment_diversity, tone_diversity,
};
use mrprio_core::SensitiveAttributeTable;
use proptest::prelude::*;

/// Textbook full-matrix edit distance over chars.
fn dp_oracle(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

const WORDS: &[&str] = &[
    "the", "a", "female", "male", "Asian", "Hispanic", "young", "elderly", "nurse", "engineer", "happy",
    "terrible", "great", "angry", "afraid", "write", "describe", "for", "with", "not", "love", "sad",
    "married", "liberal", "wonderful", "bad", "teacher", "from", "India", "surprised",
];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 0..12).prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn levenshtein_matches_dp_oracle(a in "[a-c\u{e9}]{0,20}", b in "[a-c\u{e9}]{0,20}") {
        prop_assert_eq!(levenshtein(&a, &b), dp_oracle(&a, &b));
    }

    #[test]
    fn levenshtein_is_a_metric(a in "[ab]{0,12}", b in "[ab]{0,12}", c in "[ab]{0,12}") {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        prop_assert_eq!(levenshtein(&a, &a), 0);
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
    }

    #[test]
    fn tfidf_vectors_are_unit_or_zero(docs in prop::collection::vec(sentence(), 1..6)) {
        let tokens: Vec<_> = docs.iter().map(|d| tokenize(d)).collect();
        prop_assume!(tokens.iter().any(|t| !t.is_empty()));
        let model = fit_tfidf(&tokens).unwrap();
        for t in &tokens {
            let v = model.vectorize(t);
            if t.is_empty() {
                prop_assert!(v.is_zero());
            } else {
                prop_assert!((v.norm() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cosine_diversity_is_zero_on_itself(a in sentence(), b in sentence()) {
        let tokens = [tokenize(&a), tokenize(&b)];
        prop_assume!(tokens.iter().any(|t| !t.is_empty()));
        let model = fit_tfidf(&tokens).unwrap();
        prop_assert!(cosine_diversity(&a, &a, &model).abs() < 1e-9);
        let d = cosine_diversity(&a, &b, &model);
        prop_assert!((d - cosine_diversity(&b, &a, &model)).abs() < 1e-12);
    }

    #[test]
    fn lexical_diversity_matches_set_oracle(a in sentence(), b in sentence()) {
        let ta = tokenize(&a);
        let tb = tokenize(&b);
        let total = ta.len() + tb.len();
        let unique: HashSet<String> = ta.iter().chain(tb.iter()).cloned().collect();
        let expected = if total == 0 { 0.0 } else { unique.len() as f64 / total as f64 };
        prop_assert_eq!(lexical_diversity(&a, &b), expected);
    }

    #[test]
    fn tone_distributions_sum_to_one(text in sentence()) {
        let d = KeywordTone::builtin().tone_text(&text);
        let sum: f64 = Emotion::ALL.iter().map(|&e| d.prob(e)).sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(Emotion::ALL.iter().all(|&e| d.prob(e) >= 0.0));
    }

    #[test]
    fn tone_diversity_is_a_bounded_metric(w1 in prop::array::uniform7(0.01f64..5.0), w2 in prop::array::uniform7(0.01f64..5.0)) {
        let p = ToneDistribution::from_weights(w1).unwrap();
        let q = ToneDistribution::from_weights(w2).unwrap();
        let d = tone_diversity(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert!((d - tone_diversity(&q, &p)).abs() < 1e-15);
        prop_assert!(tone_diversity(&p, &p).abs() < 1e-15);
    }

    #[test]
    fn all_metrics_stay_in_range(a in sentence(), b in sentence()) {
        let table = SensitiveAttributeTable::builtin();
        let model = fit_tfidf(&[tokenize(&a), tokenize(&b), tokenize("anchor")]).unwrap();
        let emb = HashedEmbedding;
        let lex = LexiconSentiment::builtin();
        let tone = KeywordTone::builtin();
        let unit = [
            cosine_diversity(&a, &b, &model),
            lexical_diversity(&a, &b),
            ner_diversity(&a, &b, &table),
            semantic_diversity(&emb.embed_one(&a), &emb.embed_one(&b)),
            tone_diversity(&tone.tone_text(&a), &tone.tone_text(&b)),
        ];
        for v in unit {
            prop_assert!(v.is_finite() && (0.0..=1.0).contains(&v), "{v}");
        }
        let ss = sentiment_diversity(&lex.score_text(&a), &lex.score_text(&b));
        prop_assert!(ss.is_finite() && (0.0..=2.0).contains(&ss));
    }
}

#[test]
fn tone_worked_values() {
    let joy = ToneDistribution::one_hot(Emotion::Joy);
    let anger = ToneDistribution::one_hot(Emotion::Anger);
    assert_eq!(tone_diversity(&joy, &anger), 1.0);
    assert!((tone_diversity(&ToneDistribution::uniform(), &joy) - (1.0 - 1.0 / 7.0)).abs() < 1e-12);
}
