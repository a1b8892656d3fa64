//! TF-IDF vectorizer with smoothed idf and L2-normalized output.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::tokenize::TokenList;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    corpus_size: usize,
}

/// Sparse vector as (column, weight) pairs sorted by column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector(pub Vec<(usize, f64)>);

impl SparseVector {
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.0[i].1 * other.0[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// Fit vocabulary and idf weights: `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
pub fn fit_tfidf(docs: &[TokenList]) -> Result<TfIdfModel> {
    if docs.is_empty() {
        return Err(Error::validation("cannot fit tf-idf on zero documents"));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<&str> = doc.iter().map(String::as_str).collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::validation("cannot fit tf-idf: every document is empty"));
    }
    let n = docs.len() as f64;
    let vocabulary = df
        .keys()
        .enumerate()
        .map(|(i, t)| (t.to_string(), i))
        .collect();
    let idf = df
        .values()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    Ok(TfIdfModel {
        vocabulary,
        idf,
        corpus_size: docs.len(),
    })
}

impl TfIdfModel {
    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.vocabulary.get(token).map(|&i| self.idf[i])
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    /// Raw term frequency × idf, L2-normalized; unknown tokens are ignored.
    pub fn vectorize(&self, doc: &TokenList) -> SparseVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for t in doc.iter() {
            if let Some(&col) = self.vocabulary.get(t) {
                *counts.entry(col).or_default() += 1.0;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col]))
            .collect();
        entries.sort_by_key(|(c, _)| *c);
        let mut v = SparseVector(entries);
        let norm = v.norm();
        if norm > 0.0 {
            for (_, w) in &mut v.0 {
                *w /= norm;
            }
        }
        v
    }
}

/// Cosine similarity, or `None` if either vector is zero.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> Option<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some(a.dot(b) / (na * nb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::tokenize;

    fn doc(words: &[&str]) -> TokenList {
        tokenize(&words.join(" "))
    }

    #[test]
    fn two_doc_vocabulary_and_idf() {
        let m = fit_tfidf(&[doc(&["a", "b"]), doc(&["b", "c"])]).unwrap();
        let vocab: Vec<(&str, usize)> = m.vocabulary().iter().map(|(k, v)| (k.as_str(), *v)).collect();
        assert_eq!(vocab, [("a", 0), ("b", 1), ("c", 2)]);
        assert!((m.idf("b").unwrap() - 1.0).abs() < 1e-15);
        let expected_a = (3.0f64 / 2.0).ln() + 1.0;
        assert!((m.idf("a").unwrap() - expected_a).abs() < 1e-15);
        assert_eq!(m.idf("z"), None);
    }

    #[test]
    fn single_doc_idf_is_one() {
        let m = fit_tfidf(&[doc(&["x", "y", "x"])]).unwrap();
        assert!(m.vocabulary().keys().all(|t| (m.idf(t).unwrap() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(fit_tfidf(&[]).is_err());
        assert!(fit_tfidf(&[doc(&[]), doc(&[])]).is_err());
    }

    #[test]
    fn oov_only_is_zero_vector() {
        let m = fit_tfidf(&[doc(&["a", "b"])]).unwrap();
        assert!(m.vectorize(&doc(&["q", "r"])).is_zero());
    }

    #[test]
    fn fitted_doc_has_unit_norm() {
        let m = fit_tfidf(&[doc(&["a", "b"]), doc(&["b", "c"])]).unwrap();
        assert!((m.vectorize(&doc(&["a", "b"])).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_token_matches_hand_oracle() {
        // tf(a)=2, tf(b)=1 under idf(a)=ln(1.5)+1, idf(b)=1, then normalize
        let m = fit_tfidf(&[doc(&["a", "b"]), doc(&["b", "c"])]).unwrap();
        let v = m.vectorize(&doc(&["a", "a", "b"]));
        let wa = 2.0 * (1.5f64.ln() + 1.0);
        let wb = 1.0;
        let n = (wa * wa + wb * wb).sqrt();
        assert_eq!(v.0.len(), 2);
        assert_eq!(v.0[0].0, 0);
        assert!((v.0[0].1 - wa / n).abs() < 1e-12);
        assert!((v.0[1].1 - wb / n).abs() < 1e-12);
    }
}
