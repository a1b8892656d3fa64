//! MR orderings: diversity (FDS), edit-distance baseline, greedy fault
//! coverage and seeded random permutations.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analyzers::levenshtein;
use crate::diversity::FinalDiversityScore;
use crate::error::{Error, Result};
use crate::mr::{MrId, TestPair};

pub const DEFAULT_RANDOM_COUNT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Diversity,
    Distance,
    Fault,
    Random,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Diversity, Strategy::Distance, Strategy::Fault, Strategy::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Diversity => "diversity",
            Strategy::Distance => "distance",
            Strategy::Fault => "fault",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown strategy {s:?} (expected diversity, distance, fault or random)")))
    }
}

/// A ranked sequence of MRs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ordering {
    pub strategy: Strategy,
    pub sequence: Vec<MrId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<MrId, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Ordering {
    /// True if `sequence` lists every id in `ids` exactly once and nothing else.
    pub fn is_permutation_of(&self, ids: &[MrId]) -> bool {
        let seq: BTreeSet<_> = self.sequence.iter().collect();
        let want: BTreeSet<_> = ids.iter().collect();
        seq.len() == self.sequence.len() && seq == want
    }
}

/// Per-MR, per-source-case violation grid. `skip[m][c]` marks pairs with no
/// result (the MR did not apply, or execution failed); skipped cells never
/// count as violations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    pub mr_ids: Vec<MrId>,
    pub case_ids: Vec<String>,
    pub cells: Vec<Vec<bool>>,
    pub skip: Vec<Vec<bool>>,
}

impl OutcomeMatrix {
    /// A matrix with every cell skipped, to be filled with [`OutcomeMatrix::record`].
    pub fn empty(mr_ids: Vec<MrId>, case_ids: Vec<String>) -> Self {
        let row = vec![false; case_ids.len()];
        let skip_row = vec![true; case_ids.len()];
        OutcomeMatrix {
            cells: vec![row; mr_ids.len()],
            skip: vec![skip_row; mr_ids.len()],
            mr_ids,
            case_ids,
        }
    }

    /// Build from violating case-id sets; every cell is applicable.
    pub fn from_violations(case_ids: &[&str], violations: &[(MrId, &[&str])]) -> Self {
        let mut m = OutcomeMatrix::empty(
            violations.iter().map(|(id, _)| *id).collect(),
            case_ids.iter().map(|c| c.to_string()).collect(),
        );
        for (mi, (_, faulty)) in violations.iter().enumerate() {
            for (ci, case) in case_ids.iter().enumerate() {
                m.skip[mi][ci] = false;
                m.cells[mi][ci] = faulty.contains(case);
            }
        }
        m
    }

    pub fn record(&mut self, mr: usize, case: usize, violation: bool) {
        self.cells[mr][case] = violation;
        self.skip[mr][case] = false;
    }

    pub fn mr_index(&self, id: MrId) -> Option<usize> {
        self.mr_ids.iter().position(|m| *m == id)
    }

    pub fn is_violation(&self, mr: usize, case: usize) -> bool {
        self.cells[mr][case] && !self.skip[mr][case]
    }

    /// Case indices where MR row `mr` detected a violation.
    pub fn violating_cases(&self, mr: usize) -> BTreeSet<usize> {
        (0..self.case_ids.len()).filter(|&c| self.is_violation(mr, c)).collect()
    }

    pub fn applicable(&self, mr: usize) -> usize {
        self.skip[mr].iter().filter(|s| !**s).count()
    }

    pub fn validate(&self) -> Result<()> {
        let rows_ok = |g: &Vec<Vec<bool>>| {
            g.len() == self.mr_ids.len() && g.iter().all(|r| r.len() == self.case_ids.len())
        };
        if !rows_ok(&self.cells) || !rows_ok(&self.skip) {
            return Err(Error::validation(format!(
                "outcome matrix grid does not match {} MRs x {} cases",
                self.mr_ids.len(),
                self.case_ids.len()
            )));
        }
        let unique: HashSet<_> = self.mr_ids.iter().collect();
        if unique.len() != self.mr_ids.len() {
            return Err(Error::validation("outcome matrix lists an MR twice"));
        }
        Ok(())
    }
}

/// Sort by score descending, ties by ascending id.
fn rank_scores(strategy: Strategy, scores: BTreeMap<MrId, f64>) -> Ordering {
    let mut seq: Vec<(MrId, f64)> = scores.iter().map(|(k, v)| (*k, *v)).collect();
    seq.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ordering {
        strategy,
        sequence: seq.into_iter().map(|(id, _)| id).collect(),
        scores: Some(scores),
        seed: None,
    }
}

/// Rank MRs by Final Diversity Score, highest first.
pub fn rank_by_fds(scores: &[FinalDiversityScore]) -> Result<Ordering> {
    if scores.is_empty() {
        return Err(Error::validation("no diversity scores to rank"));
    }
    let map: BTreeMap<MrId, f64> = scores.iter().map(|s| (s.mr_id, s.fds)).collect();
    if map.len() != scores.len() {
        return Err(Error::validation("duplicate MR in diversity scores"));
    }
    Ok(rank_scores(Strategy::Diversity, map))
}

/// `1 - lev(s, f) / max(|s|, |f|)` over characters; 1 for two empty strings.
pub fn distance_pair_score(source: &str, follow_up: &str) -> f64 {
    let longest = source.chars().count().max(follow_up.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(source, follow_up) as f64 / longest as f64
}

/// Edit-distance baseline: mean per-pair score, ranked descending. With
/// `invert`, the score is `1 - mean` so the most edited MRs come first.
/// MRs without pairs are left out.
pub fn rank_by_distance(pairs_by_mr: &BTreeMap<MrId, Vec<TestPair>>, invert: bool) -> Result<Ordering> {
    let mut scores = BTreeMap::new();
    for (mr, pairs) in pairs_by_mr {
        if pairs.is_empty() {
            tracing::warn!(%mr, "no pairs; excluded from distance ranking");
            continue;
        }
        let mean = pairs
            .iter()
            .map(|p| distance_pair_score(&p.source.text, &p.follow_up_text))
            .sum::<f64>()
            / pairs.len() as f64;
        scores.insert(*mr, if invert { 1.0 - mean } else { mean });
    }
    if scores.is_empty() {
        return Err(Error::validation("no MR has pairs to rank by distance"));
    }
    Ok(rank_scores(Strategy::Distance, scores))
}

/// Greedy set cover over violating cases: repeatedly take the MR that adds
/// the most not-yet-covered faulty cases. Ties go to the lowest id, or are
/// drawn at random when `tie_seed` is given. MRs adding nothing follow in
/// ascending id order.
pub fn rank_fault_greedy(matrix: &OutcomeMatrix, tie_seed: Option<u64>) -> Result<Ordering> {
    matrix.validate()?;
    if matrix.mr_ids.is_empty() {
        return Err(Error::validation("outcome matrix has no MRs"));
    }
    let faults: Vec<BTreeSet<usize>> = (0..matrix.mr_ids.len()).map(|m| matrix.violating_cases(m)).collect();
    let mut rng = tie_seed.map(ChaCha8Rng::seed_from_u64);
    let mut remaining: BTreeSet<(MrId, usize)> =
        matrix.mr_ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut covered = BTreeSet::new();
    let mut sequence = Vec::with_capacity(remaining.len());
    let mut gains = BTreeMap::new();
    loop {
        let gain = |i: usize| faults[i].difference(&covered).count();
        let best = remaining.iter().map(|&(_, i)| gain(i)).max().unwrap_or(0);
        if best == 0 {
            break;
        }
        let tied: Vec<(MrId, usize)> = remaining.iter().copied().filter(|&(_, i)| gain(i) == best).collect();
        let pick = match rng.as_mut() {
            Some(r) => tied[r.random_range(0..tied.len())],
            None => tied[0],
        };
        remaining.remove(&pick);
        covered.extend(faults[pick.1].iter().copied());
        gains.insert(pick.0, best as f64);
        sequence.push(pick.0);
    }
    for (id, _) in remaining {
        gains.insert(id, 0.0);
        sequence.push(id);
    }
    Ok(Ordering {
        strategy: Strategy::Fault,
        sequence,
        scores: Some(gains),
        seed: tie_seed,
    })
}

/// `count` seeded Fisher–Yates shuffles of `mr_ids`.
pub fn random_orderings(mr_ids: &[MrId], count: usize, seed: u64) -> Result<Vec<Ordering>> {
    if count == 0 {
        return Err(Error::validation("random ordering count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let mut sequence = mr_ids.to_vec();
            sequence.shuffle(&mut rng);
            Ordering {
                strategy: Strategy::Random,
                sequence,
                scores: None,
                seed: Some(seed),
            }
        })
        .collect())
}
