//! Text analysis kit: tokenizer, TF-IDF, gazetteer entities, embeddings,
//! sentiment, tone and edit distance. Every model-backed analyzer sits behind
//! a provider trait with a deterministic builtin implementation.

pub mod embedding;
pub mod levenshtein;
pub mod ner;
pub mod remote;
pub mod sentiment;
pub mod tfidf;
pub mod tokenize;
pub mod tone;

pub use embedding::{embed, EmbeddingProvider, EmbeddingVector, HashedEmbedding, HASHED_DIM};
pub use levenshtein::levenshtein;
pub use ner::{extract_entities, EntitySet};
pub use remote::RemoteProvider;
pub use sentiment::{sentiment, LexiconSentiment, SentimentLabel, SentimentProvider, SentimentScore};
pub use tfidf::{cosine, fit_tfidf, SparseVector, TfIdfModel};
pub use tokenize::{tokenize, TokenList};
pub use tone::{tone, Emotion, KeywordTone, ToneDistribution, ToneProvider};
