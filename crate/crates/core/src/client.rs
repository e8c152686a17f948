//! Blocking chat-completions client with structured output, bounded
//! parallelism, retry with exponential backoff, client-side rate limiting,
//! and a response cache keyed by model + request content. One email's
//! failure never aborts a batch; it becomes an error outcome in place.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cleaner::Corpus;
use crate::ingest::UniformRecord;
use crate::prompt::{build_request, parse_verdict, ClassificationRequest, Verdict};

/// Where the API key comes from. Keys never travel through command-line
/// flags, which leak into process listings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Credential {
    #[default]
    None,
    /// Key loaded from a config file.
    Inline(String),
    /// Name of an environment variable resolved at request time.
    FromEnv(String),
}

impl Credential {
    pub fn resolve(&self) -> Option<String> {
        match self {
            Credential::None => None,
            Credential::Inline(key) => Some(key.clone()),
            Credential::FromEnv(var) => std::env::var(var).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Model identifier sent in the request body.
    pub name: String,
    /// Endpoint base, e.g. `https://api.example.com/v1`.
    pub base_url: String,
    pub credential: Credential,
    pub temperature: f64,
    pub max_output_tokens: u32,
    /// Requests per minute enforced client-side.
    pub rate_limit: u32,
    pub timeout: Duration,
    /// Additional attempts after the first, for retryable failures.
    pub max_retries: u32,
    /// Base backoff; attempt n sleeps `backoff * 2^(n-1)`.
    pub backoff: Duration,
    /// Truncate user content beyond this many characters, with a marker.
    pub max_input_chars: Option<usize>,
    pub seed: Option<u64>,
}

impl ModelConfig {
    pub fn new(name: impl Into<String>, base_url: impl Into<String>) -> Self {
        ModelConfig {
            name: name.into(),
            base_url: base_url.into(),
            credential: Credential::None,
            temperature: 0.0,
            max_output_tokens: 1024,
            rate_limit: 600,
            timeout: Duration::from_secs(30),
            max_retries: 3,
            backoff: Duration::from_millis(500),
            max_input_chars: None,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if self.name.is_empty() {
            return fail("model name is empty");
        }
        if !self.base_url.starts_with("http://") && !self.base_url.starts_with("https://") {
            return fail("base_url must start with http:// or https://");
        }
        if self.rate_limit == 0 {
            return fail("rate_limit must be at least 1 request per minute");
        }
        if self.timeout.is_zero() {
            return fail("timeout must be positive");
        }
        if !self.temperature.is_finite() || !(0.0..=2.0).contains(&self.temperature) {
            return fail("temperature must be within 0..=2");
        }
        if self.max_output_tokens == 0 {
            return fail("max_output_tokens must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid model config: {0}")]
    Invalid(String),
}

/// Classification failure, by category. Exactly one of verdict/error is set
/// on an outcome.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OutcomeError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("auth: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("timeout: {0}")]
    Timeout(String),
}

impl OutcomeError {
    pub fn category(&self) -> &'static str {
        match self {
            OutcomeError::Transport(_) => "transport",
            OutcomeError::Auth(_) => "auth",
            OutcomeError::RateLimited(_) => "rate_limited",
            OutcomeError::Schema(_) => "schema",
            OutcomeError::Timeout(_) => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationOutcome {
    pub record_id: String,
    pub verdict: Option<Verdict>,
    pub error: Option<OutcomeError>,
    /// Wall time including retries and rate-limit waits; zero on cache hits.
    pub latency: Duration,
    /// HTTP calls made; zero on cache hits.
    pub attempts: u32,
}

impl ClassificationOutcome {
    fn ok(record_id: &str, verdict: Verdict, latency: Duration, attempts: u32) -> Self {
        ClassificationOutcome {
            record_id: record_id.to_string(),
            verdict: Some(verdict),
            error: None,
            latency,
            attempts,
        }
    }

    fn fail(record_id: &str, error: OutcomeError, latency: Duration, attempts: u32) -> Self {
        ClassificationOutcome {
            record_id: record_id.to_string(),
            verdict: None,
            error: Some(error),
            latency,
            attempts,
        }
    }
}

// ---------------------------------------------------------------------------
// Rate limiting

/// Evenly spaces requests at the configured rate, one-request burst allowed.
/// Shared across worker threads.
pub struct RateLimiter {
    interval: Duration,
    next_free: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(requests: u32) -> Self {
        RateLimiter {
            interval: Duration::from_secs(60) / requests.max(1),
            next_free: Mutex::new(None),
        }
    }

    /// Blocks until a slot is available.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_free.lock().unwrap();
            let now = Instant::now();
            match *next {
                Some(t) if t > now => {
                    *next = Some(t + self.interval);
                    Some(t - now)
                }
                _ => {
                    *next = Some(now + self.interval);
                    None
                }
            }
        };
        if let Some(d) = wait {
            std::thread::sleep(d);
        }
    }
}

// ---------------------------------------------------------------------------
// Response cache

/// Directory of raw model payloads keyed by model + user content. Replayed
/// payloads are byte-identical to what the endpoint returned.
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn open(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(DiskCache {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn key(model: &str, user_content: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(model.as_bytes());
        hasher.update([0u8]);
        hasher.update(user_content.as_bytes());
        hex::encode(hasher.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.path(key)).ok()
    }

    /// Write-then-rename so readers never observe a partial entry.
    pub fn put(&self, key: &str, payload: &str) -> std::io::Result<()> {
        let tmp = self.dir.join(format!(".{key}.tmp"));
        std::fs::write(&tmp, payload)?;
        std::fs::rename(&tmp, self.path(key))
    }
}

// ---------------------------------------------------------------------------
// Client

pub struct LlmClient {
    cfg: ModelConfig,
    http: reqwest::blocking::Client,
    limiter: RateLimiter,
}

enum SendError {
    Auth(String),
    RateLimited(String),
    Server(String),
    Transport(String),
    Timeout(String),
    Envelope(String),
    Status(String),
}

impl SendError {
    fn retryable(&self) -> bool {
        matches!(
            self,
            SendError::RateLimited(_)
                | SendError::Server(_)
                | SendError::Transport(_)
                | SendError::Timeout(_)
        )
    }

    fn into_outcome_error(self) -> OutcomeError {
        match self {
            SendError::Auth(m) => OutcomeError::Auth(m),
            SendError::RateLimited(m) => OutcomeError::RateLimited(m),
            SendError::Server(m) | SendError::Transport(m) | SendError::Status(m) => {
                OutcomeError::Transport(m)
            }
            SendError::Timeout(m) => OutcomeError::Timeout(m),
            SendError::Envelope(m) => OutcomeError::Schema(m),
        }
    }
}

impl LlmClient {
    pub fn new(cfg: ModelConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .connect_timeout(cfg.timeout.min(Duration::from_secs(10)))
            .build()
            .map_err(|e| ConfigError::Invalid(format!("http client: {e}")))?;
        let limiter = RateLimiter::per_minute(cfg.rate_limit);
        Ok(LlmClient { cfg, http, limiter })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn classify(&self, record_id: &str, request: &ClassificationRequest) -> ClassificationOutcome {
        self.classify_raw(record_id, request).0
    }

    /// Like [`classify`](Self::classify) but also returns the raw payload on
    /// success, for caching.
    fn classify_raw(
        &self,
        record_id: &str,
        request: &ClassificationRequest,
    ) -> (ClassificationOutcome, Option<String>) {
        let start = Instant::now();
        let url = endpoint_url(&self.cfg.base_url);
        let body = self.request_body(request);
        let mut attempts = 0u32;
        loop {
            attempts += 1;
            self.limiter.acquire();
            match self.send_once(&url, &body) {
                Ok(payload) => {
                    let outcome = match parse_verdict(&payload) {
                        Ok(verdict) => {
                            let o = ClassificationOutcome::ok(
                                record_id,
                                verdict,
                                start.elapsed(),
                                attempts,
                            );
                            return (o, Some(payload));
                        }
                        Err(e) => ClassificationOutcome::fail(
                            record_id,
                            OutcomeError::Schema(e.to_string()),
                            start.elapsed(),
                            attempts,
                        ),
                    };
                    return (outcome, None);
                }
                Err(err) => {
                    if err.retryable() && attempts <= self.cfg.max_retries {
                        let exp = attempts.saturating_sub(1).min(16);
                        std::thread::sleep(self.cfg.backoff * 2u32.pow(exp));
                        continue;
                    }
                    let outcome = ClassificationOutcome::fail(
                        record_id,
                        err.into_outcome_error(),
                        start.elapsed(),
                        attempts,
                    );
                    return (outcome, None);
                }
            }
        }
    }

    fn request_body(&self, request: &ClassificationRequest) -> serde_json::Value {
        let user_content = match self.cfg.max_input_chars {
            Some(max) if request.user_content.chars().count() > max => {
                let kept: String = request.user_content.chars().take(max).collect();
                format!("{kept}\n[truncated]")
            }
            _ => request.user_content.clone(),
        };
        let mut body = json!({
            "model": self.cfg.name,
            "messages": [
                { "role": "system", "content": request.system_prompt },
                { "role": "user", "content": user_content }
            ],
            "temperature": self.cfg.temperature,
            "max_tokens": self.cfg.max_output_tokens,
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": "email_verdict",
                    "strict": true,
                    "schema": request.output_schema
                }
            }
        });
        if let Some(seed) = self.cfg.seed {
            body["seed"] = json!(seed);
        }
        body
    }

    /// One HTTP round trip; returns the assistant message content.
    fn send_once(&self, url: &str, body: &serde_json::Value) -> Result<String, SendError> {
        let mut builder = self.http.post(url).json(body);
        if let Some(key) = self.cfg.credential.resolve() {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                SendError::Timeout(e.to_string())
            } else {
                SendError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        if status.is_success() {
            let value: serde_json::Value = response.json().map_err(|e| {
                if e.is_timeout() {
                    SendError::Timeout(e.to_string())
                } else {
                    SendError::Envelope(format!("unreadable response body: {e}"))
                }
            })?;
            return value["choices"][0]["message"]["content"]
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| {
                    SendError::Envelope("response has no message content".to_string())
                });
        }
        let code = status.as_u16();
        let msg = format!("status {code}");
        match code {
            401 | 403 => Err(SendError::Auth(msg)),
            429 => Err(SendError::RateLimited(msg)),
            500..=599 => Err(SendError::Server(msg)),
            _ => Err(SendError::Status(msg)),
        }
    }
}

fn endpoint_url(base: &str) -> String {
    let trimmed = base.trim_end_matches('/');
    if trimmed.ends_with("/chat/completions") {
        trimmed.to_string()
    } else if trimmed.ends_with("/v1") {
        format!("{trimmed}/chat/completions")
    } else {
        format!("{trimmed}/v1/chat/completions")
    }
}

/// One-off classification with a fresh client.
pub fn classify_email(
    request: &ClassificationRequest,
    cfg: &ModelConfig,
) -> ClassificationOutcome {
    match LlmClient::new(cfg.clone()) {
        Ok(client) => client.classify("", request),
        Err(e) => ClassificationOutcome::fail("", OutcomeError::Transport(e.to_string()), Duration::ZERO, 0),
    }
}

// ---------------------------------------------------------------------------
// Batch classification

/// Classifies a corpus with `parallelism` workers. Output order matches
/// corpus order regardless of completion order, and per-record failures stay
/// per-record. With a cache, previously answered requests are replayed
/// without network calls (`attempts == 0`).
pub fn classify_batch(
    corpus: &Corpus,
    cfg: &ModelConfig,
    parallelism: usize,
    cache: Option<&DiskCache>,
) -> Result<Vec<ClassificationOutcome>, ConfigError> {
    let client = LlmClient::new(cfg.clone())?;
    let n = corpus.records.len();
    let slots: Mutex<Vec<Option<ClassificationOutcome>>> = Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = parallelism.max(1).min(n.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let outcome = classify_record(&client, cache, &corpus.records[i]);
                slots.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    Ok(slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("every slot filled"))
        .collect())
}

fn classify_record(
    client: &LlmClient,
    cache: Option<&DiskCache>,
    record: &UniformRecord,
) -> ClassificationOutcome {
    let request = match build_request(record) {
        Ok(r) => r,
        Err(e) => {
            return ClassificationOutcome::fail(
                &record.id,
                OutcomeError::Schema(e.to_string()),
                Duration::ZERO,
                0,
            )
        }
    };
    let key = DiskCache::key(&client.cfg.name, &request.user_content);
    if let Some(cache) = cache {
        if let Some(payload) = cache.get(&key) {
            if let Ok(verdict) = parse_verdict(&payload) {
                return ClassificationOutcome::ok(&record.id, verdict, Duration::ZERO, 0);
            }
            // A corrupt entry falls through to a refetch.
        }
    }
    let (outcome, payload) = client.classify_raw(&record.id, &request);
    if let (Some(cache), Some(payload)) = (cache, payload) {
        if outcome.verdict.is_some() {
            let _ = cache.put(&key, &payload);
        }
    }
    outcome
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchSummary {
    pub total: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub by_category: BTreeMap<&'static str, usize>,
}

pub fn summarize_outcomes(outcomes: &[ClassificationOutcome]) -> BatchSummary {
    let mut summary = BatchSummary {
        total: outcomes.len(),
        ..BatchSummary::default()
    };
    for o in outcomes {
        match &o.error {
            None => summary.succeeded += 1,
            Some(e) => {
                summary.failed += 1;
                *summary.by_category.entry(e.category()).or_insert(0) += 1;
            }
        }
    }
    summary
}

impl std::fmt::Display for BatchSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ok, {} failed of {}", self.succeeded, self.failed, self.total)?;
        if !self.by_category.is_empty() {
            let detail: Vec<String> = self
                .by_category
                .iter()
                .map(|(k, v)| format!("{k} {v}"))
                .collect();
            write!(f, " ({})", detail.join(", "))?;
        }
        Ok(())
    }
}
