//! Prioritizer and evaluation invariants against brute-force and
//! direct-summation oracles.

use std::collections::{BTreeMap, BTreeSet};

use mrprio_core::analyzers::{fit_tfidf, tokenize, HashedEmbedding, KeywordTone, LexiconSentiment};
use mrprio_core::diversity::{
    cosine_diversity, lexical_diversity, ner_diversity, score_mr, semantic_diversity, sentiment_diversity,
    tone_diversity, Analyzers,
};
use mrprio_core::evaluation::{compare_strategies, cumulative_fdr, ttff};
use mrprio_core::prioritizer::{rank_by_fds, rank_fault_greedy, random_orderings};
use mrprio_core::{FinalDiversityScore, MrId, OutcomeMatrix, SensitiveAttributeTable, SourceTestCase, Strategy as RankStrategy, TestPair};
use proptest::prelude::*;

fn mr(n: u8) -> MrId {
    MrId::new(n).unwrap()
}

fn matrix_from(grid: &[Vec<bool>]) -> OutcomeMatrix {
    let n_cases = grid.first().map_or(0, Vec::len);
    let mut m = OutcomeMatrix::empty(
        (1..=grid.len() as u8).map(mr).collect(),
        (0..n_cases).map(|c| format!("s{c}")).collect(),
    );
    for (i, row) in grid.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m.record(i, c, v);
        }
    }
    m
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn coverage(grid: &[Vec<bool>], prefix: &[usize]) -> usize {
    let mut covered = BTreeSet::new();
    for &m in prefix {
        covered.extend(grid[m].iter().enumerate().filter(|(_, v)| **v).map(|(c, _)| c));
    }
    covered.len()
}

fn grid_strategy() -> impl Strategy<Value = Vec<Vec<bool>>> {
    (1usize..=4, 1usize..=6).prop_flat_map(|(m, c)| prop::collection::vec(prop::collection::vec(any::<bool>(), c), m))
}

proptest! {
    /// Among all orderings sharing the greedy (k-1)-prefix, none covers more
    /// faults at step k than the greedy one.
    #[test]
    fn greedy_prefix_is_maximal_among_extensions(grid in grid_strategy()) {
        let m = matrix_from(&grid);
        let greedy: Vec<usize> = rank_fault_greedy(&m, None)
            .unwrap()
            .sequence
            .iter()
            .map(|id| m.mr_index(*id).unwrap())
            .collect();
        let all = permutations(&(0..grid.len()).collect::<Vec<_>>());
        for k in 1..=grid.len() {
            let best = all
                .iter()
                .filter(|p| p[..k - 1] == greedy[..k - 1])
                .map(|p| coverage(&grid, &p[..k]))
                .max()
                .unwrap();
            prop_assert_eq!(coverage(&grid, &greedy[..k]), best, "step {}", k);
        }
    }

    #[test]
    fn fds_ranking_is_scale_invariant(values in prop::collection::vec(0.0f64..7.0, 1..11), scale in 0.1f64..10.0) {
        let scores: Vec<_> = values.iter().enumerate()
            .map(|(i, &fds)| FinalDiversityScore { mr_id: mr(i as u8 + 1), fds })
            .collect();
        let scaled: Vec<_> = scores.iter().map(|s| FinalDiversityScore { fds: s.fds * scale, ..*s }).collect();
        prop_assert_eq!(rank_by_fds(&scores).unwrap().sequence, rank_by_fds(&scaled).unwrap().sequence);
    }

    #[test]
    fn curves_are_monotone_and_end_at_the_same_value(grid in grid_strategy(), seed in any::<u64>()) {
        let m = matrix_from(&grid);
        let randoms = random_orderings(&m.mr_ids, 20, seed).unwrap();
        let finals: BTreeSet<u64> = randoms
            .iter()
            .map(|o| {
                let curve = cumulative_fdr(&m, o).unwrap();
                assert!(curve.windows(2).all(|w| w[0].cumulative_fdr <= w[1].cumulative_fdr));
                curve.last().unwrap().cumulative_fdr.to_bits()
            })
            .collect();
        prop_assert_eq!(finals.len(), 1);

        let report = compare_strategies(&m, &[], &randoms).unwrap();
        let mean = &report.strategy(RankStrategy::Random).unwrap().curve;
        for (k, point) in mean.iter().enumerate() {
            let values: Vec<f64> = randoms.iter().map(|o| cumulative_fdr(&m, o).unwrap()[k].cumulative_fdr).collect();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(point.cumulative_fdr >= lo - 1e-12 && point.cumulative_fdr <= hi + 1e-12);
        }
    }

    #[test]
    fn ttff_counts_at_most_every_applicable_pair(grid in grid_strategy(), seed in any::<u64>()) {
        let m = matrix_from(&grid);
        let total: usize = grid.iter().map(Vec::len).sum();
        let any_fault = grid.iter().flatten().any(|v| *v);
        for o in random_orderings(&m.mr_ids, 5, seed).unwrap() {
            let t = ttff(&m, &o).unwrap();
            prop_assert_eq!(t.is_some(), any_fault);
            if let Some(t) = t {
                prop_assert!(t >= 1 && t <= total);
            }
        }
    }
}

#[test]
fn worked_greedy_example() {
    let m = OutcomeMatrix::from_violations(
        &["s1", "s2", "s3", "s4"],
        &[(mr(1), &["s1", "s2"]), (mr(2), &["s2", "s3", "s4"]), (mr(3), &["s1"])],
    );
    assert_eq!(rank_fault_greedy(&m, None).unwrap().sequence, [mr(2), mr(1), mr(3)]);
}

fn pair(table: &SensitiveAttributeTable, source: &str, follow: &str) -> TestPair {
    TestPair {
        mr_id: mr(1),
        source: SourceTestCase::annotated("c", source, table).unwrap(),
        follow_up_text: follow.to_string(),
        transform_note: String::new(),
    }
}

#[test]
fn score_mr_matches_direct_summation() {
    let table = SensitiveAttributeTable::builtin();
    let (emb, lex, tone) = (HashedEmbedding, LexiconSentiment::builtin(), KeywordTone::builtin());
    let analyzers = Analyzers { table: &table, embedding: &emb, sentiment: &lex, tone: &tone };
    let pairs = vec![
        pair(&table, "The teacher explained the concept clearly.", "The engineer explained the idea effectively."),
        pair(&table, "Describe a female nurse.", "Describe a male nurse."),
        pair(&table, "Write a happy story for an Asian student.", "Write a terrible story for a student."),
        pair(&table, "Suggest hobbies for a retiree.", "Suggest hobbies for an elderly retiree."),
        pair(&table, "Describe a female nurse.", "Describe a female nurse who is angry."),
    ];

    let mut distinct: Vec<&str> = Vec::new();
    for p in &pairs {
        for t in [p.source.text.as_str(), p.follow_up_text.as_str()] {
            if !distinct.contains(&t) {
                distinct.push(t);
            }
        }
    }
    let model = fit_tfidf(&distinct.iter().map(|t| tokenize(t)).collect::<Vec<_>>()).unwrap();
    let mut sums = [0.0; 6];
    for p in &pairs {
        let (s, f) = (p.source.text.as_str(), p.follow_up_text.as_str());
        let values = [
            cosine_diversity(s, f, &model),
            lexical_diversity(s, f),
            ner_diversity(s, f, &table),
            semantic_diversity(&emb.embed_one(s), &emb.embed_one(f)),
            sentiment_diversity(&lex.score_text(s), &lex.score_text(f)),
            tone_diversity(&tone.tone_text(s), &tone.tone_text(f)),
        ];
        for (acc, v) in sums.iter_mut().zip(values) {
            *acc += v;
        }
    }
    let expected = sums.map(|s| s / pairs.len() as f64);

    let scored = score_mr(mr(1), &pairs, analyzers).unwrap();
    for (got, want) in scored.breakdown.means().iter().zip(expected) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    assert!((scored.fds.fds - expected.iter().sum::<f64>()).abs() < 1e-12);

    let mut reversed = pairs.clone();
    reversed.reverse();
    let again = score_mr(mr(1), &reversed, analyzers).unwrap();
    assert!((again.fds.fds - scored.fds.fds).abs() < 1e-12);
}

#[test]
fn random_orderings_are_reproducible_permutations() {
    let ids: Vec<MrId> = MrId::all().collect();
    let a = random_orderings(&ids, 1000, 13).unwrap();
    assert_eq!(a, random_orderings(&ids, 1000, 13).unwrap());
    assert_eq!(a.len(), 1000);
    assert!(a.iter().all(|o| o.is_permutation_of(&ids)));
    let distinct: BTreeMap<Vec<MrId>, ()> = a.iter().map(|o| (o.sequence.clone(), ())).collect();
    assert!(distinct.len() > 900);
}
