//! Shared fixtures for the pipeline benchmarks: the shipped 50-prompt demo
//! corpus and the pairs derived from it.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mrprio_core::prioritizer::OutcomeMatrix;
use mrprio_core::{derive_pairs, load_corpus, MrId, SensitiveAttributeTable, SourceTestCase, TestPair};

pub fn demo_corpus(table: &SensitiveAttributeTable) -> Vec<SourceTestCase> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demo/corpus.jsonl");
    load_corpus(path, table).expect("demo corpus loads")
}

/// Pairs for every MR over the demo corpus, `copies` times over (case ids
/// are suffixed so copies stay distinct).
pub fn demo_pairs(table: &SensitiveAttributeTable, copies: usize) -> BTreeMap<MrId, Vec<TestPair>> {
    let base = demo_corpus(table);
    let corpus: Vec<SourceTestCase> = (0..copies)
        .flat_map(|i| {
            base.iter().map(move |c| SourceTestCase { id: format!("{}-{i}", c.id), ..c.clone() })
        })
        .collect();
    MrId::all()
        .map(|mr| (mr, derive_pairs(mr, &corpus, table, 11).expect("pairs derive").pairs))
        .collect()
}

/// A fixed pseudo-random violation pattern over 11 MRs and `cases` cases.
pub fn patterned_matrix(cases: usize) -> OutcomeMatrix {
    let mut m = OutcomeMatrix::empty(MrId::all().collect(), (0..cases).map(|c| format!("c{c}")).collect());
    for mr in 0..m.mr_ids.len() {
        for c in 0..cases {
            m.record(mr, c, (mr * 7 + c * 13) % 17 == 0);
        }
    }
    m
}
