//! Per-pair diversity metrics and their per-MR aggregation into the Final
//! Diversity Score (FDS). Every metric is oriented so that larger means the
//! follow-up differs more from its source.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyzers::{
    cosine, extract_entities, fit_tfidf, tokenize, EmbeddingProvider, EmbeddingVector, EntitySet,
    SentimentProvider, SentimentScore, SparseVector, TfIdfModel, TokenList, ToneDistribution,
    ToneProvider,
};
use crate::corpus::SensitiveAttributeTable;
use crate::error::{Error, Result};
use crate::mr::{MrId, TestPair};

/// Texts sent to a provider per call.
const PROVIDER_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDiversity {
    pub pair_index: usize,
    pub cs: f64,
    pub ld: f64,
    pub ner: f64,
    pub se: f64,
    pub ss: f64,
    pub tb: f64,
}

impl PairDiversity {
    pub fn new(pair_index: usize, [cs, ld, ner, se, ss, tb]: [f64; 6]) -> Self {
        PairDiversity { pair_index, cs, ld, ner, se, ss, tb }
    }

    pub fn values(&self) -> [f64; 6] {
        [self.cs, self.ld, self.ner, self.se, self.ss, self.tb]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityBreakdown {
    pub mr_id: MrId,
    pub n_pairs: usize,
    pub cs_mr: f64,
    pub ld_mr: f64,
    pub ner_mr: f64,
    pub se_mr: f64,
    pub ss_mr: f64,
    pub tb_mr: f64,
}

impl DiversityBreakdown {
    pub fn means(&self) -> [f64; 6] {
        [self.cs_mr, self.ld_mr, self.ner_mr, self.se_mr, self.ss_mr, self.tb_mr]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalDiversityScore {
    pub mr_id: MrId,
    pub fds: f64,
}

/// One MR's scores with the per-pair values they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrDiversity {
    pub breakdown: DiversityBreakdown,
    pub fds: FinalDiversityScore,
    pub pairs: Vec<PairDiversity>,
}

/// `1 - cos` of the TF-IDF vectors. A zero vector against a non-zero one
/// counts as fully diverse; two zero vectors as identical.
pub fn cosine_diversity_vectors(a: &SparseVector, b: &SparseVector) -> f64 {
    match cosine(a, b) {
        Some(c) => (1.0 - c).clamp(0.0, 1.0),
        None if a.is_zero() && b.is_zero() => 0.0,
        None => 1.0,
    }
}

pub fn cosine_diversity(source: &str, follow_up: &str, model: &TfIdfModel) -> f64 {
    cosine_diversity_vectors(
        &model.vectorize(&tokenize(source)),
        &model.vectorize(&tokenize(follow_up)),
    )
}

/// Distinct tokens across both texts over their combined token count.
pub fn lexical_diversity_tokens(a: &TokenList, b: &TokenList) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 0.0;
    }
    let unique: std::collections::HashSet<&String> = a.iter().chain(b.iter()).collect();
    unique.len() as f64 / total as f64
}

pub fn lexical_diversity(source: &str, follow_up: &str) -> f64 {
    lexical_diversity_tokens(&tokenize(source), &tokenize(follow_up))
}

/// Jaccard distance between the gazetteer entity sets.
pub fn ner_diversity(source: &str, follow_up: &str, table: &SensitiveAttributeTable) -> f64 {
    extract_entities(source, table).jaccard_distance(&extract_entities(follow_up, table))
}

/// `1 - cos` of the embeddings, clamped to [0, 1].
pub fn semantic_diversity(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    match a.cosine(b) {
        Some(c) => (1.0 - c).clamp(0.0, 1.0),
        None if a.values.iter().all(|v| *v == 0.0) && b.values.iter().all(|v| *v == 0.0) => 0.0,
        None => 1.0,
    }
}

pub fn sentiment_diversity(a: &SentimentScore, b: &SentimentScore) -> f64 {
    (a.score - b.score).abs()
}

pub fn tone_diversity(a: &ToneDistribution, b: &ToneDistribution) -> f64 {
    a.total_variation(b)
}

/// Per-metric means and their sum.
pub fn aggregate(mr_id: MrId, pairs: &[PairDiversity]) -> Result<(DiversityBreakdown, FinalDiversityScore)> {
    if pairs.is_empty() {
        return Err(Error::validation(format!("{mr_id} has no pairs to score")));
    }
    let n = pairs.len() as f64;
    let mut sums = [0.0f64; 6];
    for p in pairs {
        for (s, v) in sums.iter_mut().zip(p.values()) {
            *s += v;
        }
    }
    let [cs_mr, ld_mr, ner_mr, se_mr, ss_mr, tb_mr] = sums.map(|s| s / n);
    let breakdown = DiversityBreakdown {
        mr_id,
        n_pairs: pairs.len(),
        cs_mr,
        ld_mr,
        ner_mr,
        se_mr,
        ss_mr,
        tb_mr,
    };
    let fds = cs_mr + ld_mr + ner_mr + se_mr + ss_mr + tb_mr;
    Ok((breakdown, FinalDiversityScore { mr_id, fds }))
}

/// Analyzers used for scoring.
#[derive(Clone, Copy)]
pub struct Analyzers<'a> {
    pub table: &'a SensitiveAttributeTable,
    pub embedding: &'a dyn EmbeddingProvider,
    pub sentiment: &'a dyn SentimentProvider,
    pub tone: &'a dyn ToneProvider,
}

/// Everything the metrics need about one distinct text.
struct TextFeatures {
    tokens: TokenList,
    tfidf: SparseVector,
    entities: EntitySet,
    embedding: EmbeddingVector,
    sentiment: SentimentScore,
    tone: ToneDistribution,
}

fn batched<T>(texts: &[&str], f: impl Fn(&[&str]) -> Result<Vec<T>>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(PROVIDER_BATCH) {
        let got = f(chunk)?;
        if got.len() != chunk.len() {
            return Err(Error::Provider(format!(
                "provider returned {} results for {} texts",
                got.len(),
                chunk.len()
            )));
        }
        out.extend(got);
    }
    Ok(out)
}

/// Diversity of every MR's pairs. The TF-IDF model is fit on the distinct
/// texts of the whole run; each distinct text is analyzed once. MRs with no
/// pairs are reported in `excluded`.
pub fn score_all(pairs_by_mr: &BTreeMap<MrId, Vec<TestPair>>, analyzers: Analyzers) -> Result<DiversityReport> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut texts: Vec<&str> = Vec::new();
    for pairs in pairs_by_mr.values() {
        for p in pairs {
            for t in [p.source.text.as_str(), p.follow_up_text.as_str()] {
                index.entry(t).or_insert_with(|| {
                    texts.push(t);
                    texts.len() - 1
                });
            }
        }
    }

    let excluded: Vec<MrId> = pairs_by_mr
        .iter()
        .filter(|(_, p)| p.is_empty())
        .map(|(id, _)| *id)
        .collect();
    for mr in &excluded {
        tracing::warn!(%mr, "no pairs; excluded from diversity ranking");
    }
    if texts.is_empty() {
        return Ok(DiversityReport { scores: Vec::new(), excluded });
    }

    let tokens: Vec<TokenList> = texts.par_iter().map(|t| tokenize(t)).collect();
    let model = fit_tfidf(&tokens)?;
    let embeddings = batched(&texts, |c| analyzers.embedding.embed_batch(c))?;
    let sentiments = batched(&texts, |c| analyzers.sentiment.score_batch(c))?;
    let tones = batched(&texts, |c| analyzers.tone.tone_batch(c))?;
    let features: Vec<TextFeatures> = tokens
        .into_par_iter()
        .zip(texts.par_iter())
        .zip(embeddings.into_par_iter().zip(sentiments.into_par_iter().zip(tones)))
        .map(|((tokens, text), (embedding, (sentiment, tone)))| TextFeatures {
            tfidf: model.vectorize(&tokens),
            entities: extract_entities(text, analyzers.table),
            tokens,
            embedding,
            sentiment,
            tone,
        })
        .collect();

    let mut scores = Vec::new();
    for (mr, pairs) in pairs_by_mr {
        if pairs.is_empty() {
            continue;
        }
        let per_pair: Vec<PairDiversity> = pairs
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let s = &features[index[p.source.text.as_str()]];
                let f = &features[index[p.follow_up_text.as_str()]];
                PairDiversity::new(
                    i,
                    [
                        cosine_diversity_vectors(&s.tfidf, &f.tfidf),
                        lexical_diversity_tokens(&s.tokens, &f.tokens),
                        s.entities.jaccard_distance(&f.entities),
                        semantic_diversity(&s.embedding, &f.embedding),
                        sentiment_diversity(&s.sentiment, &f.sentiment),
                        tone_diversity(&s.tone, &f.tone),
                    ],
                )
            })
            .collect();
        let (breakdown, fds) = aggregate(*mr, &per_pair)?;
        for (name, v) in ["cs", "ld", "ner", "se", "tb"].iter().zip([
            breakdown.cs_mr,
            breakdown.ld_mr,
            breakdown.ner_mr,
            breakdown.se_mr,
            breakdown.tb_mr,
        ]) {
            if !(0.0..=1.0).contains(&v) {
                tracing::warn!(%mr, metric = name, value = v, "metric mean outside [0, 1]");
            }
        }
        scores.push(MrDiversity { breakdown, fds, pairs: per_pair });
    }
    Ok(DiversityReport { scores, excluded })
}

/// Score a single MR's pairs on their own (the TF-IDF model is fit on just
/// these pairs).
pub fn score_mr(mr_id: MrId, pairs: &[TestPair], analyzers: Analyzers) -> Result<MrDiversity> {
    if pairs.is_empty() {
        return Err(Error::validation(format!("{mr_id} has no pairs to score")));
    }
    let mut by_mr = BTreeMap::new();
    by_mr.insert(mr_id, pairs.to_vec());
    Ok(score_all(&by_mr, analyzers)?.scores.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub scores: Vec<MrDiversity>,
    pub excluded: Vec<MrId>,
}

impl DiversityReport {
    pub fn final_scores(&self) -> Vec<FinalDiversityScore> {
        self.scores.iter().map(|s| s.fds).collect()
    }

    /// `mr_id,n_pairs,cs,ld,ner,se,ss,tb,fds`, one row per scored MR.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mr_id,n_pairs,cs,ld,ner,se,ss,tb,fds\n");
        for s in &self.scores {
            let b = &s.breakdown;
            let _ = write!(out, "{},{}", b.mr_id, b.n_pairs);
            for v in b.means() {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",{}", s.fds.fds);
        }
        out
    }
}
