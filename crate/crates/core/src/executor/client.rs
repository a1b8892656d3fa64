//! Chat-completions client for the model under test.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::cassette::Cassette;
use super::transport::{RetryPolicy, Transport};
use crate::error::{Error, Result};

/// Decoding parameters. The defaults are the deterministic profile: greedy
/// decoding with a fixed seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingConfig {
    pub temperature: f64,
    pub seed: u64,
    pub top_k: u32,
    pub beam_search: bool,
    pub length_penalty: f64,
    pub max_tokens: u32,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        DecodingConfig {
            temperature: 0.0,
            seed: 42,
            top_k: 1,
            beam_search: false,
            length_penalty: 1.0,
            max_tokens: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelEndpoint {
    pub id: String,
    pub base_url: String,
    pub api_key: Option<String>,
}

impl ModelEndpoint {
    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

pub struct ChatClient {
    endpoint: ModelEndpoint,
    decoding: DecodingConfig,
    transport: Arc<dyn Transport>,
    cassette: Arc<Cassette>,
    retry: RetryPolicy,
    network_calls: AtomicUsize,
}

impl ChatClient {
    pub fn new(
        endpoint: ModelEndpoint,
        decoding: DecodingConfig,
        transport: Arc<dyn Transport>,
        cassette: Arc<Cassette>,
    ) -> Self {
        ChatClient {
            endpoint,
            decoding,
            transport,
            cassette,
            retry: RetryPolicy::default(),
            network_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn endpoint(&self) -> &ModelEndpoint {
        &self.endpoint
    }

    pub fn decoding(&self) -> &DecodingConfig {
        &self.decoding
    }

    pub fn cassette(&self) -> &Cassette {
        &self.cassette
    }

    /// Completions that reached the transport (retries not counted twice).
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::Relaxed)
    }

    /// The request identity used as the cassette key: model, prompt and the
    /// full decoding configuration. The endpoint URL and credential are not
    /// part of it, so a cassette replays against any gateway.
    pub fn exchange_request(&self, prompt: &str) -> Value {
        json!({
            "model": self.endpoint.id,
            "prompt": prompt,
            "decoding": self.decoding,
        })
    }

    fn wire_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.endpoint.id,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": self.decoding.temperature,
            "seed": self.decoding.seed,
            "max_tokens": self.decoding.max_tokens,
        })
    }

    /// Response text for `prompt`, resolved through the cassette.
    pub fn complete(&self, prompt: &str) -> Result<String> {
        let request = self.exchange_request(prompt);
        self.cassette.fetch(&request, || {
            self.network_calls.fetch_add(1, Ordering::Relaxed);
            let url = self.endpoint.completions_url();
            let body = self.wire_body(prompt);
            let raw = self
                .retry
                .run(|| self.transport.post_json(&url, self.endpoint.api_key.as_deref(), &body))?;
            extract_content(&raw)
        })
    }
}

/// `choices[0].message.content` of a chat-completions reply.
pub fn extract_content(raw: &str) -> Result<String> {
    let v: Value = serde_json::from_str(raw)
        .map_err(|e| Error::Transport(format!("malformed completion reply: {e}")))?;
    if let Some(err) = v.get("error") {
        return Err(Error::Transport(format!("endpoint returned an error: {err}")));
    }
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| Error::Transport("completion reply has no choices[0].message.content".into()))
}
