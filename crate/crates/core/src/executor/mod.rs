//! Execution of test pairs against the model under test and construction of
//! the outcome matrix.

pub mod cassette;
pub mod client;
pub mod transport;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

pub use cassette::{canonical_json, request_key, Cassette, CassetteEntry, CassetteMode};
pub use client::{extract_content, ChatClient, DecodingConfig, ModelEndpoint};
pub use transport::{HttpTransport, RetryPolicy, ScriptedTransport, Transport};

use crate::analyzers::{SentimentLabel, SentimentProvider};
use crate::error::{Error, Result};
use crate::mr::{MrId, TestPair};
use crate::prioritizer::OutcomeMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub violation: bool,
    pub source_label: SentimentLabel,
    pub follow_label: SentimentLabel,
}

impl PairOutcome {
    pub fn from_labels(source_label: SentimentLabel, follow_label: SentimentLabel) -> Self {
        PairOutcome {
            violation: source_label != follow_label,
            source_label,
            follow_label,
        }
    }
}

/// Run both prompts of one pair and compare the sentiment of the responses.
pub fn evaluate_pair(pair: &TestPair, client: &ChatClient, sentiment: &dyn SentimentProvider) -> Result<PairOutcome> {
    let wrap = |e: Error| Error::Execution {
        pair: format!("{}/{}", pair.mr_id, pair.source.id),
        source: Box::new(e),
    };
    let r_source = client.complete(&pair.source.text).map_err(wrap)?;
    let r_follow = client.complete(&pair.follow_up_text).map_err(wrap)?;
    let labels = sentiment.score_batch(&[&r_source, &r_follow]).map_err(wrap)?;
    Ok(PairOutcome::from_labels(labels[0].label, labels[1].label))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecutorOptions {
    pub max_concurrency: usize,
    /// Fraction of pairs allowed to fail before the run as a whole fails.
    pub max_error_fraction: f64,
}

impl Default for ExecutorOptions {
    fn default() -> Self {
        ExecutorOptions {
            max_concurrency: 4,
            max_error_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairError {
    pub mr_id: MrId,
    pub case_id: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay_miss_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub matrix: OutcomeMatrix,
    pub errored: Vec<PairError>,
    pub pairs_total: usize,
    pub unique_prompts: usize,
}

/// Resolve every distinct prompt once with at most `max_concurrency`
/// requests in flight. Results land in slots indexed by prompt position.
fn complete_all(prompts: &[&str], client: &ChatClient, max_concurrency: usize) -> Vec<Result<String>> {
    let slots: Vec<Mutex<Option<Result<String>>>> = prompts.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = max_concurrency.max(1).min(prompts.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= prompts.len() {
                    break;
                }
                let r = client.complete(prompts[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// Execute every pair and record the violation grid over `case_ids` (the
/// full corpus, in order). Cases an MR did not apply to stay skipped; pairs
/// whose completions fail are skipped and listed in `errored`.
pub fn build_outcome_matrix(
    pairs_by_mr: &BTreeMap<MrId, Vec<TestPair>>,
    case_ids: &[String],
    client: &ChatClient,
    sentiment: &dyn SentimentProvider,
    options: ExecutorOptions,
) -> Result<ExecutionReport> {
    let case_index: HashMap<&str, usize> = case_ids.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut prompt_index: HashMap<&str, usize> = HashMap::new();
    let mut prompts: Vec<&str> = Vec::new();
    let mut pairs_total = 0;
    for pairs in pairs_by_mr.values() {
        for p in pairs {
            if !case_index.contains_key(p.source.id.as_str()) {
                return Err(Error::validation(format!(
                    "pair {}/{} refers to a case outside the corpus",
                    p.mr_id, p.source.id
                )));
            }
            pairs_total += 1;
            for t in [p.source.text.as_str(), p.follow_up_text.as_str()] {
                prompt_index.entry(t).or_insert_with(|| {
                    prompts.push(t);
                    prompts.len() - 1
                });
            }
        }
    }

    let responses = complete_all(&prompts, client, options.max_concurrency);

    // distinct successful responses, scored in one pass
    let mut resp_index: HashMap<&str, usize> = HashMap::new();
    let mut distinct: Vec<&str> = Vec::new();
    for r in responses.iter().flatten() {
        resp_index.entry(r.as_str()).or_insert_with(|| {
            distinct.push(r);
            distinct.len() - 1
        });
    }
    let mut labels = Vec::with_capacity(distinct.len());
    for chunk in distinct.chunks(64) {
        labels.extend(sentiment.score_batch(chunk)?.into_iter().map(|s| s.label));
    }
    let label_of = |prompt: &str| -> std::result::Result<SentimentLabel, &Error> {
        match &responses[prompt_index[prompt]] {
            Ok(text) => Ok(labels[resp_index[text.as_str()]]),
            Err(e) => Err(e),
        }
    };

    let mut matrix = OutcomeMatrix::empty(pairs_by_mr.keys().copied().collect(), case_ids.to_vec());
    let mut errored = Vec::new();
    for (mi, pairs) in pairs_by_mr.values().enumerate() {
        for p in pairs {
            match (label_of(&p.source.text), label_of(&p.follow_up_text)) {
                (Ok(a), Ok(b)) => {
                    let outcome = PairOutcome::from_labels(a, b);
                    matrix.record(mi, case_index[p.source.id.as_str()], outcome.violation);
                }
                (Err(e), _) | (_, Err(e)) => errored.push(PairError {
                    mr_id: p.mr_id,
                    case_id: p.source.id.clone(),
                    message: e.to_string(),
                    replay_miss_key: e.replay_key().map(str::to_string),
                }),
            }
        }
    }

    if !errored.is_empty() {
        tracing::warn!(errored = errored.len(), total = pairs_total, "some pairs failed to execute");
        if errored.len() as f64 > options.max_error_fraction * pairs_total as f64 {
            let mut replay_misses: Vec<String> = responses
                .iter()
                .filter_map(|r| r.as_ref().err().and_then(Error::replay_key).map(str::to_string))
                .collect();
            replay_misses.sort();
            replay_misses.dedup();
            return Err(Error::TooManyErrors {
                errored: errored.len(),
                total: pairs_total,
                replay_misses,
            });
        }
    }
    Ok(ExecutionReport {
        matrix,
        errored,
        pairs_total,
        unique_prompts: prompts.len(),
    })
}
