use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use crate::error::{Error, Result};

const EMOTIONS: &str = include_str!("../../data/emotions.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Fear,
    Joy,
    Neutral,
    Sadness,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; 7] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Neutral,
        Emotion::Sadness,
        Emotion::Surprise,
    ];
}

/// Probability distribution over the seven basic emotions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Emotion, f64>", into = "BTreeMap<Emotion, f64>")]
pub struct ToneDistribution {
    probs: [f64; 7],
}

impl ToneDistribution {
    /// Validate and renormalize non-negative weights for all seven emotions.
    pub fn from_weights(weights: [f64; 7]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Provider("tone weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Provider("tone weights sum to zero".into()));
        }
        Ok(ToneDistribution {
            probs: weights.map(|w| w / total),
        })
    }

    pub fn one_hot(e: Emotion) -> Self {
        let mut probs = [0.0; 7];
        probs[e as usize] = 1.0;
        ToneDistribution { probs }
    }

    pub fn uniform() -> Self {
        ToneDistribution {
            probs: [1.0 / 7.0; 7],
        }
    }

    pub fn prob(&self, e: Emotion) -> f64 {
        self.probs[e as usize]
    }

    pub fn argmax(&self) -> Emotion {
        let mut best = Emotion::Anger;
        for e in Emotion::ALL {
            if self.prob(e) > self.prob(best) {
                best = e;
            }
        }
        best
    }

    /// Total-variation distance `½ Σ |p(e) − q(e)|`.
    pub fn total_variation(&self, other: &ToneDistribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

impl TryFrom<BTreeMap<Emotion, f64>> for ToneDistribution {
    type Error = Error;

    fn try_from(map: BTreeMap<Emotion, f64>) -> Result<Self> {
        let mut weights = [0.0; 7];
        for e in Emotion::ALL {
            weights[e as usize] = *map
                .get(&e)
                .ok_or_else(|| Error::Provider(format!("tone distribution lacks {e:?}")))?;
        }
        Self::from_weights(weights)
    }
}

impl From<ToneDistribution> for BTreeMap<Emotion, f64> {
    fn from(d: ToneDistribution) -> Self {
        Emotion::ALL.iter().map(|&e| (e, d.prob(e))).collect()
    }
}

pub trait ToneProvider: Send + Sync {
    fn id(&self) -> &str;
    fn tone_batch(&self, texts: &[&str]) -> Result<Vec<ToneDistribution>>;
}

pub fn tone(text: &str, provider: &dyn ToneProvider) -> Result<ToneDistribution> {
    provider
        .tone_batch(&[text])?
        .pop()
        .ok_or_else(|| Error::Provider("tone provider returned no distribution".into()))
}

#[derive(Deserialize)]
struct EmotionFile {
    version: String,
    emotions: BTreeMap<Emotion, Vec<String>>,
}

/// Keyword-count tone scorer with add-one smoothing.
#[derive(Debug, Clone)]
pub struct KeywordTone {
    version: String,
    keywords: HashMap<String, Emotion>,
}

impl KeywordTone {
    pub fn builtin() -> Self {
        Self::from_json_str(EMOTIONS).expect("shipped emotion table is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: EmotionFile = serde_json::from_str(s)?;
        let mut keywords = HashMap::new();
        for (emotion, words) in file.emotions {
            for w in words {
                if keywords.insert(w.to_lowercase(), emotion).is_some() {
                    return Err(Error::validation(format!("keyword {w:?} listed under two emotions")));
                }
            }
        }
        Ok(KeywordTone {
            version: file.version,
            keywords,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn tone_text(&self, text: &str) -> ToneDistribution {
        let mut counts = [1.0; 7];
        for tok in tokenize(text).iter() {
            if let Some(&e) = self.keywords.get(tok) {
                counts[e as usize] += 1.0;
            }
        }
        ToneDistribution::from_weights(counts).expect("smoothed counts are positive")
    }
}

impl ToneProvider for KeywordTone {
    fn id(&self) -> &str {
        "builtin-keywords"
    }

    fn tone_batch(&self, texts: &[&str]) -> Result<Vec<ToneDistribution>> {
        Ok(texts.iter().map(|t| self.tone_text(t)).collect())
    }
}
