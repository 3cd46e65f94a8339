use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::extract::extract_json;
use super::GatewayError;
use crate::records::{JsonlAppender, DEFAULT_MAX_ATTEMPTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// Body of a chat-completions request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

impl ChatRequest {
    pub fn last_user_content(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
    #[serde(default)]
    pub total_tokens: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatReply {
    pub content: String,
    pub usage: Option<Usage>,
}

/// A completed request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatExchange {
    pub request: ChatRequest,
    pub raw_response: String,
    pub usage: Option<Usage>,
    /// Requests sent, including the successful one.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed service response: {0}")]
    Protocol(String),
    #[error("no scripted behavior for record {0:?}")]
    UnknownId(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport(_) | BackendError::RateLimited(_) | BackendError::Protocol(_) => true,
            BackendError::Status { status, .. } => *status >= 500 || *status == 408,
            BackendError::Auth(_) | BackendError::UnknownId(_) => false,
        }
    }
}

/// Anything that can answer a chat-completions request.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, BackendError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        (**self).complete(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubles on each further attempt.
    pub backoff_base: Duration,
    pub backoff_cap: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff_base: Duration::from_millis(500),
            backoff_cap: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            backoff_base: Duration::ZERO,
            backoff_cap: Duration::ZERO,
        }
    }

    /// Delay after failed attempt number `attempt` (1-based).
    pub fn delay_after(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.backoff_base.saturating_mul(factor).min(self.backoff_cap)
    }
}

/// Sends `request` until a reply parses as a single JSON object.
pub fn chat<B: ChatBackend + ?Sized>(
    backend: &B,
    request: &ChatRequest,
    policy: &RetryPolicy,
) -> Result<ChatExchange, GatewayError> {
    chat_validated(backend, request, policy, |raw| {
        extract_json(raw).map(|_| ()).map_err(|e| e.to_string())
    })
    .map(|(ex, ())| ex)
}

/// Sends `request` until `validate` accepts a reply, retrying transport
/// failures and rejected replies with exponential backoff. Authentication
/// failures and other non-retryable errors stop immediately.
pub fn chat_validated<B, T, F>(
    backend: &B,
    request: &ChatRequest,
    policy: &RetryPolicy,
    validate: F,
) -> Result<(ChatExchange, T), GatewayError>
where
    B: ChatBackend + ?Sized,
    F: Fn(&str) -> Result<T, String>,
{
    let max = policy.max_attempts.max(1);
    let mut last_error = String::new();
    for attempt in 1..=max {
        if attempt > 1 {
            let delay = policy.delay_after(attempt - 1);
            if !delay.is_zero() {
                thread::sleep(delay);
            }
        }
        match backend.complete(request) {
            Ok(reply) => match validate(&reply.content) {
                Ok(value) => {
                    let exchange = ChatExchange {
                        request: request.clone(),
                        raw_response: reply.content,
                        usage: reply.usage,
                        attempts: attempt,
                    };
                    return Ok((exchange, value));
                }
                Err(why) => last_error = format!("invalid response: {why}"),
            },
            Err(BackendError::Auth(msg)) => return Err(GatewayError::Auth(msg)),
            Err(e) if !e.is_retryable() => return Err(GatewayError::Backend(e)),
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(GatewayError::Exhausted {
        attempts: max,
        last_error,
    })
}

/// Wraps a backend and appends every request with its reply or error to a
/// JSONL audit file.
pub struct TranscriptBackend<B> {
    inner: B,
    log: Mutex<JsonlAppender>,
}

impl<B> TranscriptBackend<B> {
    pub fn new(inner: B, log: JsonlAppender) -> Self {
        Self { inner, log: Mutex::new(log) }
    }
}

impl<B: ChatBackend> ChatBackend for TranscriptBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        let result = self.inner.complete(request);
        let entry = match &result {
            Ok(reply) => json!({"request": request, "response": reply.content, "usage": reply.usage}),
            Err(e) => json!({"request": request, "error": e.to_string()}),
        };
        if let Ok(mut log) = self.log.lock() {
            // auditing must not fail the request
            let _ = log.append::<Value>(&entry);
        }
        result
    }
}
