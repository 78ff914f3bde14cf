use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use futures::future::BoxFuture;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::EndpointConfig;
use crate::promptgen::{ChatMessage, PromptRecord};

/// What a backend is asked to complete.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    /// Position of the prompt in its file.
    pub index: usize,
    pub prompt: &'a PromptRecord,
    pub run_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    /// Worth retrying: rate limits, server errors, timeouts, dropped
    /// connections.
    #[error("transient failure: {0}")]
    Transient(String),
    /// Rejected credentials. Aborts the whole run.
    #[error("authentication failed: {0}")]
    Auth(String),
    /// Fails this prompt only.
    #[error("request failed: {0}")]
    Fatal(String),
}

/// A chat model. Implementations must be safe to call concurrently.
pub trait ChatBackend: Send + Sync {
    /// Short label recorded in run manifests.
    fn describe(&self) -> String;

    fn complete<'a>(&'a self, request: CompletionRequest<'a>) -> BoxFuture<'a, Result<Completion, BackendError>>;
}

/// Offline stand-ins for a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockModel {
    /// Target token, a space, then the reference text.
    Oracle,
    /// The source text unchanged.
    Echo,
    /// The first `ceil(p * words)` words of the source text.
    TruncateP(f64),
    /// Cycles through an empty reply, a copy of the user message and a
    /// repetition loop, by prompt position.
    Degenerate,
}

pub(crate) const LOOP_UNIT: &str = "and then it repeats ";

impl MockModel {
    pub fn respond(&self, index: usize, prompt: &PromptRecord) -> String {
        match *self {
            MockModel::Oracle => format!("{} {}", prompt.target_token, prompt.reference_text),
            MockModel::Echo => prompt.source_text.clone(),
            MockModel::TruncateP(p) => {
                let words: Vec<&str> = prompt.source_text.split_whitespace().collect();
                let k = ((p.clamp(0.0, 1.0) * words.len() as f64).ceil() as usize).min(words.len());
                words[..k].join(" ")
            }
            MockModel::Degenerate => match index % 3 {
                0 => String::new(),
                1 => prompt.user_content().to_string(),
                _ => LOOP_UNIT.repeat(6),
            },
        }
    }
}

impl fmt::Display for MockModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MockModel::Oracle => f.write_str("oracle"),
            MockModel::Echo => f.write_str("echo"),
            MockModel::TruncateP(p) => write!(f, "truncate_p:{p}"),
            MockModel::Degenerate => f.write_str("degenerate"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown mock {0:?} (expected oracle, echo, truncate_p:<p> or degenerate)")]
pub struct UnknownMock(pub String);

impl FromStr for MockModel {
    type Err = UnknownMock;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "oracle" => return Ok(MockModel::Oracle),
            "echo" => return Ok(MockModel::Echo),
            "degenerate" => return Ok(MockModel::Degenerate),
            _ => {}
        }
        t.strip_prefix("truncate_p")
            .and_then(|r| r.strip_prefix(':').or_else(|| r.strip_prefix('=')))
            .and_then(|p| p.parse::<f64>().ok())
            .filter(|p| (0.0..=1.0).contains(p))
            .map(MockModel::TruncateP)
            .ok_or_else(|| UnknownMock(s.to_string()))
    }
}

impl ChatBackend for MockModel {
    fn describe(&self) -> String {
        format!("mock:{self}")
    }

    fn complete<'a>(&'a self, request: CompletionRequest<'a>) -> BoxFuture<'a, Result<Completion, BackendError>> {
        let text = self.respond(request.index, request.prompt);
        Box::pin(async move { Ok(Completion { text, latency_ms: 0 }) })
    }
}

/// Chat-completions client: `POST {base_url}/chat/completions`.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: reqwest::Client,
    url: String,
    config: EndpointConfig,
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, BackendError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout.max(0.001)))
            .build()
            .map_err(|e| BackendError::Fatal(format!("building HTTP client: {e}")))?;
        let url = format!("{}/chat/completions", config.base_url.trim_end_matches('/'));
        Ok(Self { client, url, config })
    }

    pub fn request_body(&self, messages: &[ChatMessage], run_seed: u64) -> serde_json::Value {
        json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
            "seed": run_seed,
        })
    }

    async fn send(&self, request: CompletionRequest<'_>) -> Result<Completion, BackendError> {
        let body = self.request_body(&request.prompt.request_messages(), request.run_seed);
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let started = Instant::now();
        let resp = req.send().await.map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(BackendError::Auth(format!("HTTP {status}")));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = resp.text().await.unwrap_or_default();
            return Err(BackendError::Fatal(format!("HTTP {status}: {}", text.trim())));
        }
        let value: serde_json::Value = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                BackendError::Transient(e.to_string())
            } else {
                BackendError::Fatal(format!("unreadable response: {e}"))
            }
        })?;
        let choice = value
            .pointer("/choices/0/message")
            .ok_or_else(|| BackendError::Fatal("response has no choices[0].message".into()))?;
        let text = choice.get("content").and_then(|c| c.as_str()).unwrap_or_default().to_string();
        Ok(Completion {
            text,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

impl ChatBackend for HttpBackend {
    fn describe(&self) -> String {
        format!("http:{}", self.config.model_name)
    }

    fn complete<'a>(&'a self, request: CompletionRequest<'a>) -> BoxFuture<'a, Result<Completion, BackendError>> {
        Box::pin(self.send(request))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_names() {
        assert_eq!("oracle".parse::<MockModel>().unwrap(), MockModel::Oracle);
        assert_eq!("truncate_p:0.5".parse::<MockModel>().unwrap(), MockModel::TruncateP(0.5));
        assert!("truncate_p:2".parse::<MockModel>().is_err());
        assert!("gpt".parse::<MockModel>().is_err());
        assert_eq!(MockModel::TruncateP(0.25).to_string(), "truncate_p:0.25");
    }

    #[test]
    fn loop_unit_is_long_enough() {
        assert!(LOOP_UNIT.chars().count() >= 20);
    }
}
