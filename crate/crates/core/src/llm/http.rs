//! Blocking client for OpenAI-compatible HTTP endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::client::{BackendError, ChatBackend, ChatReply, ChatRequest, Usage};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "ANNOBRIDGE_API_KEY";

/// One OpenAI-compatible service: base URL, model name and credential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Never read from config files; see [`EndpointConfig::with_env_key`].
    #[serde(skip)]
    pub api_key: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    120
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout_secs: default_timeout_secs(),
        }
    }

    /// Fills `api_key` from `ANNOBRIDGE_API_KEY` when it is set and non-empty.
    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        self
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}/{}", self.base_url.trim_end_matches('/'), path)
    }
}

/// Shared request plumbing for the chat and embedding clients.
#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(config: EndpointConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// POSTs `body` to `<base_url>/<path>` and returns the parsed JSON reply.
    pub fn post_json<T: Serialize>(&self, path: &str, body: &T) -> Result<Value, BackendError> {
        let mut req = self.client.post(self.config.url(path)).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| BackendError::Protocol(format!("response is not JSON: {e}"))),
            401 | 403 => Err(BackendError::Auth(format!("HTTP {status}: {}", truncate(&text)))),
            429 => Err(BackendError::RateLimited(truncate(&text))),
            _ => Err(BackendError::Status { status, body: truncate(&text) }),
        }
    }
}

fn truncate(s: &str) -> String {
    s.chars().take(300).collect()
}

/// Chat client for `POST <base_url>/chat/completions`.
#[derive(Debug, Clone)]
pub struct HttpChatBackend {
    endpoint: HttpEndpoint,
}

impl HttpChatBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, BackendError> {
        Ok(Self { endpoint: HttpEndpoint::new(config)? })
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    #[serde(default)]
    content: Option<String>,
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        let value = self.endpoint.post_json("chat/completions", request)?;
        let parsed: CompletionResponse = serde_json::from_value(value)
            .map_err(|e| BackendError::Protocol(format!("unexpected completion shape: {e}")))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::Protocol("completion has no message content".into()))?;
        Ok(ChatReply { content, usage: parsed.usage })
    }
}
