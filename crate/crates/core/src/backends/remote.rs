//! Chat-completion client for remote endpoints.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{BackendError, BackendErrorKind, Message, ModelSpec, Player, PlayerError};

pub const DEFAULT_RESPONSE_PATH: &str = "choices[0].message.content";

/// Retry schedule for transient failures (HTTP 429, 5xx, timeouts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Wait before each retry; its length is the retry count.
    pub backoff: Vec<Duration>,
    pub request_timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            backoff: vec![
                Duration::from_secs(1),
                Duration::from_secs(2),
                Duration::from_secs(4),
            ],
            request_timeout: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    /// Same retry count with no waiting; for tests against local servers.
    pub fn immediate() -> Self {
        RetryPolicy {
            backoff: vec![Duration::ZERO; 3],
            request_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug)]
struct TokenBucket {
    capacity: f64,
    per_sec: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    fn new(requests_per_minute: u32) -> Self {
        let capacity = f64::from(requests_per_minute.max(1));
        TokenBucket {
            capacity,
            per_sec: capacity / 60.0,
            tokens: capacity,
            last: Instant::now(),
        }
    }

    /// Takes a token, or returns how long to wait for one.
    fn try_take(&mut self) -> Result<(), Duration> {
        let now = Instant::now();
        let elapsed = now.duration_since(self.last).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.per_sec).min(self.capacity);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - self.tokens) / self.per_sec))
        }
    }
}

/// HTTP client shared by all players of one endpoint.
#[derive(Debug)]
pub struct RemoteClient {
    http: reqwest::blocking::Client,
    retry: RetryPolicy,
    bucket: Option<Mutex<TokenBucket>>,
}

enum Attempt {
    Done(String),
    Transient(BackendError),
    Fatal(BackendError),
}

/// Follows a path like `choices[0].message.content` into `body`.
pub fn extract_path<'a>(body: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cur = body;
    for segment in path.split('.') {
        let (name, mut rest) = match segment.find('[') {
            Some(i) => segment.split_at(i),
            None => (segment, ""),
        };
        if !name.is_empty() {
            cur = cur.get(name)?;
        }
        while let Some(stripped) = rest.strip_prefix('[') {
            let (idx, after) = stripped.split_once(']')?;
            cur = cur.get(idx.parse::<usize>().ok()?)?;
            rest = after;
        }
        if !rest.is_empty() {
            return None;
        }
    }
    Some(cur)
}

impl RemoteClient {
    pub fn new(retry: RetryPolicy, requests_per_minute: Option<u32>) -> Result<Self, BackendError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(retry.request_timeout)
            .build()
            .map_err(|e| BackendError::new(BackendErrorKind::Unsupported, e.to_string()))?;
        Ok(RemoteClient {
            http,
            retry,
            bucket: requests_per_minute.map(|rpm| Mutex::new(TokenBucket::new(rpm))),
        })
    }

    fn throttle(&self) {
        let Some(bucket) = &self.bucket else { return };
        loop {
            let wait = bucket.lock().expect("rate limiter poisoned").try_take();
            match wait {
                Ok(()) => return,
                Err(d) => std::thread::sleep(d),
            }
        }
    }

    fn attempt(&self, url: &str, key: &str, body: &Value, path: &str) -> Attempt {
        self.throttle();
        let resp = match self.http.post(url).bearer_auth(key).json(body).send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                return Attempt::Transient(BackendError::new(BackendErrorKind::Timeout, e.to_string()))
            }
            Err(e) => {
                return Attempt::Transient(BackendError::new(
                    BackendErrorKind::ServerUnavailable,
                    e.to_string(),
                ))
            }
        };
        let status = resp.status();
        if status.as_u16() == 429 {
            return Attempt::Transient(BackendError::new(
                BackendErrorKind::RateLimitExhausted,
                "HTTP 429",
            ));
        }
        if status.is_server_error() {
            return Attempt::Transient(BackendError::new(
                BackendErrorKind::ServerUnavailable,
                format!("HTTP {}", status.as_u16()),
            ));
        }
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Attempt::Fatal(BackendError::new(
                BackendErrorKind::Auth,
                format!("HTTP {}", status.as_u16()),
            ));
        }
        if !status.is_success() {
            return Attempt::Fatal(BackendError::new(
                BackendErrorKind::MalformedReply,
                format!("HTTP {}", status.as_u16()),
            ));
        }
        let body: Value = match resp.json() {
            Ok(v) => v,
            Err(e) if e.is_timeout() => {
                return Attempt::Transient(BackendError::new(BackendErrorKind::Timeout, e.to_string()))
            }
            Err(e) => {
                return Attempt::Fatal(BackendError::new(
                    BackendErrorKind::MalformedReply,
                    e.to_string(),
                ))
            }
        };
        match extract_path(&body, path).and_then(Value::as_str) {
            Some(text) => Attempt::Done(text.trim_end().to_string()),
            None => Attempt::Fatal(BackendError::new(
                BackendErrorKind::MalformedReply,
                format!("no text at '{path}'"),
            )),
        }
    }

    /// Sends `history` and returns the assistant text with trailing
    /// whitespace removed. The key is read before any request is made.
    pub fn generate(&self, spec: &ModelSpec, history: &[Message]) -> Result<String, BackendError> {
        let var = spec.auth_env_var.as_deref().unwrap_or_default();
        let key = std::env::var(var).ok().filter(|k| !k.is_empty()).ok_or_else(|| {
            BackendError::new(
                BackendErrorKind::Auth,
                format!("environment variable '{var}' is not set"),
            )
        })?;
        let url = spec.endpoint_url.as_deref().ok_or_else(|| {
            BackendError::new(BackendErrorKind::Unsupported, "remote model without endpoint_url")
        })?;
        let body = json!({
            "model": spec.api_model.as_deref().unwrap_or(&spec.model_id),
            "messages": history,
            "temperature": spec.gen_params.temperature,
            "max_tokens": spec.gen_params.max_response_tokens,
        });
        let path = spec.response_path.as_deref().unwrap_or(DEFAULT_RESPONSE_PATH);

        let mut waits = self.retry.backoff.iter();
        loop {
            match self.attempt(url, &key, &body, path) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(e) => match waits.next() {
                    Some(wait) => {
                        log::debug!("{}: {e}; retrying in {wait:?}", spec.model_id);
                        std::thread::sleep(*wait);
                    }
                    None => return Err(e),
                },
            }
        }
    }
}

/// A remote model seated in an episode.
#[derive(Debug)]
pub struct RemotePlayer {
    spec: ModelSpec,
    client: std::sync::Arc<RemoteClient>,
}

impl RemotePlayer {
    pub fn new(spec: ModelSpec, client: std::sync::Arc<RemoteClient>) -> Result<Self, BackendError> {
        spec.validate()
            .map_err(|e| BackendError::new(BackendErrorKind::Unsupported, e))?;
        Ok(RemotePlayer { spec, client })
    }
}

impl Player for RemotePlayer {
    fn model_id(&self) -> &str {
        &self.spec.model_id
    }

    fn respond(&mut self, history: &[Message]) -> Result<String, PlayerError> {
        Ok(self.client.generate(&self.spec, history)?)
    }
}
