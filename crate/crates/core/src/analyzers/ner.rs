use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::gazetteer::fold;
use crate::corpus::{annotate_attributes, Category, SensitiveAttributeTable};

/// Set of `(category, case-folded value)` entities found in a text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySet(pub BTreeSet<(Category, String)>);

impl EntitySet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Jaccard distance `1 - |A ∩ B| / |A ∪ B|`, 0 when both are empty.
    pub fn jaccard_distance(&self, other: &EntitySet) -> f64 {
        let union = self.0.union(&other.0).count();
        if union == 0 {
            return 0.0;
        }
        let inter = self.0.intersection(&other.0).count();
        1.0 - inter as f64 / union as f64
    }
}

pub fn extract_entities(text: &str, table: &SensitiveAttributeTable) -> EntitySet {
    EntitySet(
        annotate_attributes(text, table)
            .into_iter()
            .map(|s| (s.category, fold(&s.value)))
            .collect(),
    )
}
