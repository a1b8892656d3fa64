use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use crate::error::{Error, Result};

const VALENCE: &str = include_str!("../../data/valence.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Negative,
}

/// Polarity score in `[-1, 1]`; the label is positive iff `score >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub score: f64,
    pub label: SentimentLabel,
}

impl SentimentScore {
    pub fn new(score: f64) -> Result<Self> {
        if !score.is_finite() || !(-1.0..=1.0).contains(&score) {
            return Err(Error::Provider(format!("sentiment score {score} outside [-1, 1]")));
        }
        let label = if score >= 0.0 {
            SentimentLabel::Positive
        } else {
            SentimentLabel::Negative
        };
        Ok(SentimentScore { score, label })
    }
}

pub trait SentimentProvider: Send + Sync {
    fn id(&self) -> &str;
    fn score_batch(&self, texts: &[&str]) -> Result<Vec<SentimentScore>>;
}

pub fn sentiment(text: &str, provider: &dyn SentimentProvider) -> Result<SentimentScore> {
    provider
        .score_batch(&[text])?
        .pop()
        .ok_or_else(|| Error::Provider("sentiment provider returned no score".into()))
}

#[derive(Deserialize)]
struct ValenceFile {
    version: String,
    negators: Vec<String>,
    valence: HashMap<String, f64>,
}

/// Signed-lexicon scorer: mean valence of matched tokens, with a hit's sign
/// flipped when the token right before it is a negator.
#[derive(Debug, Clone)]
pub struct LexiconSentiment {
    version: String,
    negators: HashSet<String>,
    valence: HashMap<String, f64>,
}

impl LexiconSentiment {
    pub fn builtin() -> Self {
        Self::from_json_str(VALENCE).expect("shipped valence table is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ValenceFile = serde_json::from_str(s)?;
        if let Some((w, v)) = file.valence.iter().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::validation(format!("valence of {w:?} is {v}, outside [-1, 1]")));
        }
        Ok(LexiconSentiment {
            version: file.version,
            negators: file.negators.into_iter().collect(),
            valence: file.valence,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn score_text(&self, text: &str) -> SentimentScore {
        let tokens = tokenize(text);
        let toks = tokens.as_slice();
        let mut sum = 0.0;
        let mut hits = 0usize;
        for (i, tok) in toks.iter().enumerate() {
            if let Some(&v) = self.valence.get(tok) {
                let negated = i > 0 && self.negators.contains(&toks[i - 1]);
                sum += if negated { -v } else { v };
                hits += 1;
            }
        }
        let score = (sum / hits.max(1) as f64).clamp(-1.0, 1.0);
        SentimentScore::new(score).expect("clamped score is in range")
    }
}

impl SentimentProvider for LexiconSentiment {
    fn id(&self) -> &str {
        "builtin-lexicon"
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<SentimentScore>> {
        Ok(texts.iter().map(|t| self.score_text(t)).collect())
    }
}
