//! Fault detection rate, cumulative FDR curves, time to first failure and
//! cross-strategy reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::mr::MrId;
use crate::prioritizer::{Ordering, OutcomeMatrix, Strategy};

/// Violations over applicable pairs, per MR. MRs with no applicable pair
/// get 0 and are logged.
pub fn fdr_per_mr(matrix: &OutcomeMatrix) -> BTreeMap<MrId, f64> {
    matrix
        .mr_ids
        .iter()
        .enumerate()
        .map(|(m, id)| {
            let applicable = matrix.applicable(m);
            if applicable == 0 {
                tracing::warn!(mr = %id, "no applicable pairs; FDR reported as 0");
                return (*id, 0.0);
            }
            (*id, matrix.violating_cases(m).len() as f64 / applicable as f64)
        })
        .collect()
}

/// MRs of the matrix with no applicable pair.
pub fn unexecuted_mrs(matrix: &OutcomeMatrix) -> Vec<MrId> {
    (0..matrix.mr_ids.len())
        .filter(|&m| matrix.applicable(m) == 0)
        .map(|m| matrix.mr_ids[m])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    /// The k-th MR of the ordering; absent on averaged curves.
    pub mr_id: Option<MrId>,
    pub cumulative_fdr: f64,
}

fn check_covers(matrix: &OutcomeMatrix, ordering: &Ordering) -> Result<Vec<usize>> {
    if !ordering.is_permutation_of(&matrix.mr_ids) {
        let have: BTreeSet<_> = matrix.mr_ids.iter().map(ToString::to_string).collect();
        let want: BTreeSet<_> = ordering.sequence.iter().map(ToString::to_string).collect();
        return Err(Error::validation(format!(
            "{} ordering covers {{{}}} but the outcome matrix has {{{}}}",
            ordering.strategy,
            want.into_iter().collect::<Vec<_>>().join(", "),
            have.into_iter().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(ordering
        .sequence
        .iter()
        .map(|id| matrix.mr_index(*id).expect("checked"))
        .collect())
}

/// Fraction of all source cases with at least one violation among the
/// first k MRs, for k = 1..=n.
pub fn cumulative_fdr(matrix: &OutcomeMatrix, ordering: &Ordering) -> Result<Vec<CurvePoint>> {
    let rows = check_covers(matrix, ordering)?;
    let total = matrix.case_ids.len();
    let mut covered = BTreeSet::new();
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            covered.extend(matrix.violating_cases(m));
            CurvePoint {
                k: i + 1,
                mr_id: Some(matrix.mr_ids[m]),
                cumulative_fdr: if total == 0 { 0.0 } else { covered.len() as f64 / total as f64 },
            }
        })
        .collect())
}

/// Pairs executed (MR by MR in ordering order, cases in corpus order, skipped
/// cells not counted) up to and including the first violation. `None` when
/// nothing violates.
pub fn ttff(matrix: &OutcomeMatrix, ordering: &Ordering) -> Result<Option<usize>> {
    let rows = check_covers(matrix, ordering)?;
    let mut count = 0;
    for m in rows {
        for c in 0..matrix.case_ids.len() {
            if matrix.skip[m][c] {
                continue;
            }
            count += 1;
            if matrix.cells[m][c] {
                return Ok(Some(count));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub strategy: Strategy,
    /// Number of orderings summarized (1 except for the random baseline).
    pub n_orderings: usize,
    pub curve: Vec<CurvePoint>,
    /// TTFF, or for the random baseline the mean over orderings that found a
    /// fault; `None` when no ordering finds one.
    pub ttff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<MrId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_mr_fdr: BTreeMap<MrId, f64>,
    pub unexecuted_mrs: Vec<MrId>,
    pub n_cases: usize,
    pub strategies: Vec<StrategyResult>,
    /// Prioritization wall time per strategy, seconds.
    pub timing: BTreeMap<Strategy, f64>,
    pub cumulative_fdr_definition: String,
    pub seeds: BTreeMap<String, u64>,
    pub config: Value,
}

pub const CUMULATIVE_FDR_DEFINITION: &str =
    "distinct source cases with a violation among the first k MRs / total source cases";

/// Curves and TTFF for each single ordering plus the averaged random
/// baseline.
pub fn compare_strategies(
    matrix: &OutcomeMatrix,
    orderings: &[Ordering],
    random_set: &[Ordering],
) -> Result<EvalReport> {
    matrix.validate()?;
    let mut strategies = Vec::new();
    for o in orderings {
        strategies.push(StrategyResult {
            strategy: o.strategy,
            n_orderings: 1,
            curve: cumulative_fdr(matrix, o)?,
            ttff: ttff(matrix, o)?.map(|t| t as f64),
            sequence: Some(o.sequence.clone()),
        });
    }
    if !random_set.is_empty() {
        let n = matrix.mr_ids.len();
        let mut sums = vec![0.0; n];
        let mut ttffs = Vec::new();
        for o in random_set {
            for (s, p) in sums.iter_mut().zip(cumulative_fdr(matrix, o)?) {
                *s += p.cumulative_fdr;
            }
            if let Some(t) = ttff(matrix, o)? {
                ttffs.push(t as f64);
            }
        }
        let count = random_set.len() as f64;
        strategies.push(StrategyResult {
            strategy: Strategy::Random,
            n_orderings: random_set.len(),
            curve: sums
                .into_iter()
                .enumerate()
                .map(|(i, s)| CurvePoint { k: i + 1, mr_id: None, cumulative_fdr: s / count })
                .collect(),
            ttff: (!ttffs.is_empty()).then(|| ttffs.iter().sum::<f64>() / ttffs.len() as f64),
            sequence: None,
        });
    }
    Ok(EvalReport {
        per_mr_fdr: fdr_per_mr(matrix),
        unexecuted_mrs: unexecuted_mrs(matrix),
        n_cases: matrix.case_ids.len(),
        strategies,
        timing: BTreeMap::new(),
        cumulative_fdr_definition: CUMULATIVE_FDR_DEFINITION.to_string(),
        seeds: BTreeMap::new(),
        config: Value::Null,
    })
}

impl EvalReport {
    pub fn strategy(&self, s: Strategy) -> Option<&StrategyResult> {
        self.strategies.iter().find(|r| r.strategy == s)
    }

    /// `strategy,k,mr_id,cumulative_fdr`
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("strategy,k,mr_id,cumulative_fdr\n");
        for r in &self.strategies {
            for p in &r.curve {
                let mr = p.mr_id.map(|m| m.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{}", r.strategy, p.k, mr, p.cumulative_fdr);
            }
        }
        out
    }

    /// `strategy,ttff,prioritization_seconds`
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("strategy,ttff,prioritization_seconds\n");
        for r in &self.strategies {
            let ttff = r.ttff.map(|t| t.to_string()).unwrap_or_default();
            let secs = self.timing.get(&r.strategy).map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{ttff},{secs}", r.strategy);
        }
        out
    }
}
