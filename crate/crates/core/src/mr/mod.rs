//! Metamorphic relations: the registry of the eleven MRs and the engine that
//! turns source prompts into follow-up prompts.
//!
//! The oracle for every relation is sentiment equality between the model's
//! responses to the source and the follow-up prompt; the engine only builds
//! the prompt pairs.

pub mod registry;
pub mod templates;
mod transform;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use registry::{definition, registry, MrDefinition, MrId, TransformKind, MR_COUNT};
pub use templates::{InsertionTemplate, MrTemplates, Placement};

use crate::corpus::{SensitiveAttributeTable, SourceTestCase};
use crate::error::{Error, Result};
use crate::hashing::derive_seed;

/// A source prompt and its transformed follow-up under one MR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestPair {
    pub mr_id: MrId,
    pub source: SourceTestCase,
    pub follow_up_text: String,
    pub transform_note: String,
}

/// Why an MR could not be applied to a case. Not an error: the case is
/// simply skipped for that relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inapplicable {
    pub mr_id: MrId,
    pub case_id: String,
    pub reason: String,
}

impl std::fmt::Display for Inapplicable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} not applicable to {}: {}", self.mr_id, self.case_id, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub case_id: String,
    pub reason: String,
}

/// Output of [`MrEngine::derive_pairs`]: pairs in corpus order plus the
/// cases that were skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedPairs {
    pub mr_id: MrId,
    pub pairs: Vec<TestPair>,
    pub skipped: Vec<SkipRecord>,
}

/// Gazetteer plus transformation templates.
#[derive(Debug, Clone)]
pub struct MrEngine {
    table: SensitiveAttributeTable,
    templates: MrTemplates,
}

impl MrEngine {
    pub fn new(table: SensitiveAttributeTable, templates: MrTemplates) -> Self {
        MrEngine { table, templates }
    }

    pub fn table(&self) -> &SensitiveAttributeTable {
        &self.table
    }

    pub fn templates(&self) -> &MrTemplates {
        &self.templates
    }

    /// Apply one MR to one case. The result depends only on the arguments:
    /// the RNG is keyed by `seed`, the MR id and the case id.
    pub fn apply(
        &self,
        mr: MrId,
        case: &SourceTestCase,
        seed: u64,
    ) -> std::result::Result<TestPair, Inapplicable> {
        let inapplicable = |reason: String| Inapplicable {
            mr_id: mr,
            case_id: case.id.clone(),
            reason,
        };
        let rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[&mr.to_string(), &case.id]));
        let mut ctx = transform::Ctx {
            table: &self.table,
            templates: &self.templates,
            rng,
        };
        let (follow_up_text, transform_note) =
            transform::apply(mr, case, &mut ctx).map_err(inapplicable)?;
        if follow_up_text == case.text {
            return Err(inapplicable("transformation left the prompt unchanged".into()));
        }
        Ok(TestPair {
            mr_id: mr,
            source: case.clone(),
            follow_up_text,
            transform_note,
        })
    }

    /// Apply `mr` to every case, keeping corpus order.
    pub fn derive_pairs(&self, mr: MrId, corpus: &[SourceTestCase], seed: u64) -> Result<DerivedPairs> {
        if corpus.is_empty() {
            return Err(Error::validation("cannot derive pairs from an empty corpus"));
        }
        let mut pairs = Vec::new();
        let mut skipped = Vec::new();
        for case in corpus {
            match self.apply(mr, case, seed) {
                Ok(pair) => pairs.push(pair),
                Err(skip) => skipped.push(SkipRecord {
                    case_id: skip.case_id,
                    reason: skip.reason,
                }),
            }
        }
        tracing::debug!(%mr, pairs = pairs.len(), skipped = skipped.len(), "derived pairs");
        Ok(DerivedPairs { mr_id: mr, pairs, skipped })
    }
}

/// [`MrEngine::apply`] with the default templates.
pub fn apply_mr(
    mr: MrId,
    case: &SourceTestCase,
    table: &SensitiveAttributeTable,
    seed: u64,
) -> std::result::Result<TestPair, Inapplicable> {
    MrEngine::new(table.clone(), MrTemplates::default()).apply(mr, case, seed)
}

/// [`MrEngine::derive_pairs`] with the default templates.
pub fn derive_pairs(
    mr: MrId,
    corpus: &[SourceTestCase],
    table: &SensitiveAttributeTable,
    seed: u64,
) -> Result<DerivedPairs> {
    MrEngine::new(table.clone(), MrTemplates::default()).derive_pairs(mr, corpus, seed)
}
