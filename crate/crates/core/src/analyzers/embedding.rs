use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use crate::error::{Error, Result};
use crate::hashing::fnv1a64;

pub const HASHED_DIM: usize = 256;
const HASH_SEED: u64 = 0x6d72_7072_696f_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub provider_id: String,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, provider_id: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Provider("embedding contains non-finite values".into()));
        }
        Ok(EmbeddingVector {
            values,
            provider_id: provider_id.into(),
        })
    }

    /// Cosine similarity, or `None` when either vector is zero or lengths differ.
    pub fn cosine(&self, other: &EmbeddingVector) -> Option<f64> {
        if self.values.len() != other.values.len() {
            return None;
        }
        let dot: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        let na = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = other.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            None
        } else {
            Some(dot / (na * nb))
        }
    }
}

pub trait EmbeddingProvider: Send + Sync {
    fn id(&self) -> &str;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>>;
}

pub fn embed(text: &str, provider: &dyn EmbeddingProvider) -> Result<EmbeddingVector> {
    provider
        .embed_batch(&[text])?
        .pop()
        .ok_or_else(|| Error::Provider("embedding provider returned no vector".into()))
}

/// Offline fallback: signed feature hashing of the token bag into 256
/// dimensions, L2-normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashedEmbedding;

impl HashedEmbedding {
    pub fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut values = vec![0.0; HASHED_DIM];
        for tok in tokenize(text).iter() {
            let h = fnv1a64(HASH_SEED, tok.as_bytes());
            let idx = (h % HASHED_DIM as u64) as usize;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            values[idx] += sign;
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector {
            values,
            provider_id: "builtin-hashed-256".into(),
        }
    }
}

impl EmbeddingProvider for HashedEmbedding {
    fn id(&self) -> &str {
        "builtin-hashed-256"
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
