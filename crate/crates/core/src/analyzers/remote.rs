//! HTTP-backed analyzer providers. Request body is `{"texts": [...]}`; the
//! response carries `vectors`, `scores` or `distributions`. Every call goes
//! through a cassette so remote analysis replays offline.

use std::sync::Arc;

use serde_json::{json, Value};

use super::embedding::{EmbeddingProvider, EmbeddingVector};
use super::sentiment::{SentimentProvider, SentimentScore};
use super::tone::{ToneDistribution, ToneProvider};
use crate::error::{Error, Result};
use crate::executor::cassette::Cassette;
use crate::executor::transport::{RetryPolicy, Transport};

pub struct RemoteProvider {
    id: String,
    url: String,
    api_key: Option<String>,
    transport: Arc<dyn Transport>,
    cassette: Arc<Cassette>,
    retry: RetryPolicy,
}

impl RemoteProvider {
    pub fn new(
        url: impl Into<String>,
        api_key: Option<String>,
        transport: Arc<dyn Transport>,
        cassette: Arc<Cassette>,
    ) -> Self {
        let url = url.into();
        RemoteProvider {
            id: format!("remote:{url}"),
            url,
            api_key,
            transport,
            cassette,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// POST the batch and pull the array named `field` out of the reply.
    fn call(&self, texts: &[&str], field: &str) -> Result<Vec<Value>> {
        let body = json!({ "texts": texts });
        let request = json!({ "endpoint": self.url, "texts": texts });
        let raw = self.cassette.fetch(&request, || {
            self.retry
                .run(|| self.transport.post_json(&self.url, self.api_key.as_deref(), &body))
        })?;
        let reply: Value = serde_json::from_str(&raw)
            .map_err(|e| Error::Provider(format!("{}: malformed reply: {e}", self.url)))?;
        let items = reply
            .get(field)
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Provider(format!("{}: reply has no `{field}` array", self.url)))?;
        if items.len() != texts.len() {
            return Err(Error::Provider(format!(
                "{}: sent {} texts, got {} {field}",
                self.url,
                texts.len(),
                items.len()
            )));
        }
        Ok(items.clone())
    }
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Provider(format!("bad {what}: {e}")))
}

impl EmbeddingProvider for RemoteProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        self.call(texts, "vectors")?
            .into_iter()
            .map(|v| EmbeddingVector::new(parse(v, "vector")?, self.id.clone()))
            .collect()
    }
}

impl SentimentProvider for RemoteProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<SentimentScore>> {
        self.call(texts, "scores")?
            .into_iter()
            .map(|v| SentimentScore::new(parse(v, "score")?))
            .collect()
    }
}

impl ToneProvider for RemoteProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn tone_batch(&self, texts: &[&str]) -> Result<Vec<ToneDistribution>> {
        self.call(texts, "distributions")?
            .into_iter()
            .map(|v| parse(v, "distribution"))
            .collect()
    }
}
