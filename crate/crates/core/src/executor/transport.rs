//! Blocking HTTP POST of JSON bodies, behind a trait so tests and demos can
//! substitute a scripted model.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::Value;

use crate::error::{Error, Result};

pub trait Transport: Send + Sync {
    /// POST `body` to `url` and return the raw response body.
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<String>;
}

/// `ureq`-backed transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpTransport { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(120))
    }
}

impl Transport for HttpTransport {
    fn post_json(&self, url: &str, bearer: Option<&str>, body: &Value) -> Result<String> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(token) = bearer {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| Error::Transport(format!("POST {url}: {e}")))?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("reading response from {url}: {e}")))
    }
}

type Handler = dyn Fn(&str, &Value) -> Result<String> + Send + Sync;

/// In-process transport driven by a closure; counts calls.
pub struct ScriptedTransport {
    handler: Box<Handler>,
    calls: AtomicUsize,
}

impl ScriptedTransport {
    pub fn new(handler: impl Fn(&str, &Value) -> Result<String> + Send + Sync + 'static) -> Self {
        ScriptedTransport {
            handler: Box::new(handler),
            calls: AtomicUsize::new(0),
        }
    }

    /// A chat-completions stub that answers each prompt with `reply(prompt)`.
    pub fn chat(reply: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        Self::new(move |_, body| {
            let prompt = body["messages"][0]["content"]
                .as_str()
                .ok_or_else(|| Error::Transport("request has no user message".into()))?;
            Ok(serde_json::json!({
                "choices": [{"index": 0, "message": {"role": "assistant", "content": reply(prompt)}}]
            })
            .to_string())
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for ScriptedTransport {
    fn post_json(&self, url: &str, _bearer: Option<&str>, body: &Value) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        (self.handler)(url, body)
    }
}

/// Exponential backoff for transport failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay_ms: 250,
            max_delay_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_retries: 0,
            ..Self::default()
        }
    }

    /// Run `op`, retrying transport errors with doubling delays.
    pub fn run<T>(&self, mut op: impl FnMut() -> Result<T>) -> Result<T> {
        let mut attempt = 0;
        loop {
            match op() {
                Err(Error::Transport(msg)) if attempt < self.max_retries => {
                    let delay = self
                        .base_delay_ms
                        .saturating_mul(1u64 << attempt.min(20))
                        .min(self.max_delay_ms);
                    tracing::warn!(attempt, delay_ms = delay, "transport error, retrying: {msg}");
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retries_then_succeeds() {
        let policy = RetryPolicy {
            max_retries: 3,
            base_delay_ms: 1,
            max_delay_ms: 2,
        };
        let mut n = 0;
        let out = policy.run(|| {
            n += 1;
            if n < 3 {
                Err(Error::Transport("flaky".into()))
            } else {
                Ok(n)
            }
        });
        assert_eq!(out.unwrap(), 3);
    }

    #[test]
    fn gives_up_after_cap() {
        let policy = RetryPolicy {
            max_retries: 2,
            base_delay_ms: 1,
            max_delay_ms: 1,
        };
        let mut n = 0;
        let out: Result<()> = policy.run(|| {
            n += 1;
            Err(Error::Transport("down".into()))
        });
        assert!(out.is_err());
        assert_eq!(n, 3);
    }

    #[test]
    fn non_transport_errors_are_not_retried() {
        let mut n = 0;
        let out: Result<()> = RetryPolicy::default().run(|| {
            n += 1;
            Err(Error::validation("bad"))
        });
        assert!(out.is_err());
        assert_eq!(n, 1);
    }
}
