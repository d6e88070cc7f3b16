//! Completion clients: a live HTTP client and a fixture-backed replay client.
//!
//! Fixture files are JSONL of `{"prompt_hash", "sample"?, "response_text"}`
//! where `prompt_hash` is the lowercase hex SHA-256 of the prompt text.
//! `sample` distinguishes repeated draws of one prompt (generation rounds);
//! a record without it answers every sample.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::limit::InFlight;

pub const API_KEY_VAR: &str = "LLM_API_KEY";
pub const API_BASE_VAR: &str = "LLM_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub model: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub frequency_penalty: f64,
    /// Index of this draw among repeated requests for the same prompt.
    #[serde(skip)]
    pub sample: u32,
}

impl CompletionRequest {
    pub fn new(model: impl Into<String>, prompt: impl Into<String>) -> Self {
        CompletionRequest {
            model: model.into(),
            prompt: prompt.into(),
            temperature: 0.7,
            max_tokens: 256,
            frequency_penalty: 0.0,
            sample: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("missing credential: set {API_KEY_VAR}")]
    MissingCredential,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    Malformed(String),
    #[error("no fixture for prompt {prompt_hash} (sample {sample})")]
    FixtureMiss { prompt_hash: String, sample: u32 },
    #[error("fixture file: {0}")]
    Fixture(String),
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError>;

    /// Requests that actually left the process.
    fn network_requests(&self) -> usize {
        0
    }
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub prompt_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<u32>,
    pub response_text: String,
}

/// Replays recorded completions; never touches the network.
#[derive(Debug, Default)]
pub struct FixtureClient {
    responses: HashMap<(String, Option<u32>), String>,
}

impl FixtureClient {
    pub fn new(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut responses = HashMap::new();
        for r in records {
            responses.entry((r.prompt_hash, r.sample)).or_insert(r.response_text);
        }
        FixtureClient { responses }
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, LlmError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| LlmError::Fixture(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: FixtureRecord = serde_json::from_str(&line)
                .map_err(|e| LlmError::Fixture(format!("line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        Ok(FixtureClient::new(records))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let f = std::fs::File::open(path)
            .map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        FixtureClient::parse(BufReader::new(f))
    }

    pub fn insert(&mut self, prompt: &str, sample: Option<u32>, response: impl Into<String>) {
        self.responses.insert((prompt_hash(prompt), sample), response.into());
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl LlmClient for FixtureClient {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let h = prompt_hash(&req.prompt);
        self.responses
            .get(&(h.clone(), Some(req.sample)))
            .or_else(|| self.responses.get(&(h.clone(), None)))
            .cloned()
            .ok_or(LlmError::FixtureMiss {
                prompt_hash: h,
                sample: req.sample,
            })
    }
}

/// Completion-API client. Retries transport failures and 5xx/429 responses
/// with linear backoff, and bounds concurrent requests.
pub struct HttpLlmClient {
    base: String,
    key: String,
    http: reqwest::blocking::Client,
    retries: u32,
    backoff: Duration,
    gate: InFlight,
    sent: AtomicUsize,
}

impl HttpLlmClient {
    pub fn new(base: &str, key: &str, timeout: Duration, max_in_flight: usize) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpLlmClient {
            base: base.trim_end_matches('/').to_string(),
            key: key.to_string(),
            http,
            retries: 2,
            backoff: Duration::from_millis(500),
            gate: InFlight::new(max_in_flight),
            sent: AtomicUsize::new(0),
        })
    }

    /// Reads `LLM_API_KEY` (required) and `LLM_API_BASE`.
    pub fn from_env(timeout: Duration, max_in_flight: usize) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_VAR)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(LlmError::MissingCredential)?;
        let base = std::env::var(API_BASE_VAR).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        HttpLlmClient::new(&base, &key, timeout, max_in_flight)
    }

    pub fn with_retries(mut self, retries: u32, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    fn attempt(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        self.sent.fetch_add(1, Ordering::Relaxed);
        let body = json!({
            "model": req.model,
            "prompt": req.prompt,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "frequency_penalty": req.frequency_penalty,
        });
        let resp = self
            .http
            .post(format!("{}/completions", self.base))
            .bearer_auth(&self.key)
            .json(&body)
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        extract_completion_text(&text)
    }
}

/// Accepts `{"text": ...}` or the `choices` shapes of common completion APIs.
pub fn extract_completion_text(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::Malformed(e.to_string()))?;
    if let Some(t) = v.get("text").and_then(Value::as_str) {
        return Ok(t.to_string());
    }
    let first = v.get("choices").and_then(|c| c.get(0));
    if let Some(t) = first.and_then(|c| c.get("text")).and_then(Value::as_str) {
        return Ok(t.to_string());
    }
    if let Some(t) = first
        .and_then(|c| c.pointer("/message/content"))
        .and_then(Value::as_str)
    {
        return Ok(t.to_string());
    }
    Err(LlmError::Malformed("no `text` or `choices` field".into()))
}

fn retryable(e: &LlmError) -> bool {
    match e {
        LlmError::Transport(_) => true,
        LlmError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let _permit = self.gate.acquire();
        let mut tries = 0;
        loop {
            match self.attempt(req) {
                Err(e) if retryable(&e) && tries < self.retries => {
                    tries += 1;
                    log::warn!("completion attempt {tries} failed: {e}; retrying");
                    std::thread::sleep(self.backoff * tries);
                }
                other => return other,
            }
        }
    }

    fn network_requests(&self) -> usize {
        self.sent.load(Ordering::Relaxed)
    }
}

/// Wraps a client and records every successful exchange as fixture records.
pub struct RecordingClient<C> {
    inner: C,
    log: Mutex<Vec<FixtureRecord>>,
}

impl<C: LlmClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        RecordingClient {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn records(&self) -> Vec<FixtureRecord> {
        let mut v = self.log.lock().unwrap_or_else(|e| e.into_inner()).clone();
        v.sort_by(|a, b| (&a.prompt_hash, a.sample).cmp(&(&b.prompt_hash, b.sample)));
        v
    }

    pub fn write_fixtures<W: Write>(&self, out: W) -> std::io::Result<()> {
        crate::jsonl::write_records(out, &self.records())
    }
}

impl<C: LlmClient> LlmClient for RecordingClient<C> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let text = self.inner.complete(req)?;
        self.log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(FixtureRecord {
                prompt_hash: prompt_hash(&req.prompt),
                sample: Some(req.sample),
                response_text: text.clone(),
            });
        Ok(text)
    }

    fn network_requests(&self) -> usize {
        self.inner.network_requests()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            prompt_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn fixture_prefers_exact_sample() {
        let mut c = FixtureClient::default();
        c.insert("p", None, "any");
        c.insert("p", Some(1), "one");
        let mut req = CompletionRequest::new("m", "p");
        assert_eq!(c.complete(&req).unwrap(), "any");
        req.sample = 1;
        assert_eq!(c.complete(&req).unwrap(), "one");
        req.prompt = "q".into();
        assert!(matches!(c.complete(&req), Err(LlmError::FixtureMiss { .. })));
        assert_eq!(c.network_requests(), 0);
    }

    #[test]
    fn completion_shapes() {
        assert_eq!(extract_completion_text(r#"{"text":"a"}"#).unwrap(), "a");
        assert_eq!(extract_completion_text(r#"{"choices":[{"text":"b"}]}"#).unwrap(), "b");
        assert_eq!(
            extract_completion_text(r#"{"choices":[{"message":{"content":"c"}}]}"#).unwrap(),
            "c"
        );
        assert!(extract_completion_text("{}").is_err());
    }

    #[test]
    fn recording_round_trips_through_fixtures() {
        let mut inner = FixtureClient::default();
        inner.insert("p", None, "r");
        let rec = RecordingClient::new(inner);
        let mut req = CompletionRequest::new("m", "p");
        req.sample = 2;
        rec.complete(&req).unwrap();
        let mut buf = Vec::new();
        rec.write_fixtures(&mut buf).unwrap();
        let replay = FixtureClient::parse(&buf[..]).unwrap();
        assert_eq!(replay.complete(&req).unwrap(), "r");
    }
}
