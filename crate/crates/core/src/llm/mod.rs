//! Prompt rendering, chat-completions clients with bounded retries, and
//! robust extraction of the JSON the model returns.

mod client;
mod extract;
mod http;
mod mock;
mod prompt;
mod validate;

pub use client::{
    chat, chat_validated, BackendError, ChatBackend, ChatExchange, ChatMessage, ChatReply,
    ChatRequest, RetryPolicy, Role, TranscriptBackend, Usage,
};
pub use extract::{extract_json, ExtractError};
pub use http::{EndpointConfig, HttpChatBackend, HttpEndpoint, API_KEY_ENV};
pub use mock::{MockBehavior, MockLlm, CODE_REPLY, PROSE_REPLY};
pub use prompt::{
    load_few_shot, parse_few_shot, render_prompt, FewShotExample, PromptTemplate, TemplateKind,
};
pub use validate::{validate_transfer_response, validate_translation_response, ResponseViolation};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("record lacks required field `{0}`")]
    MissingField(String),
    #[error("gave up after {attempts} attempt(s): {last_error}")]
    Exhausted { attempts: u32, last_error: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error(transparent)]
    Backend(BackendError),
    #[error("configuration: {0}")]
    Config(String),
}

/// Model name, sampling temperature and retry policy for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatSettings {
    pub model: String,
    pub temperature: f64,
    pub policy: RetryPolicy,
}

impl ChatSettings {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            temperature: 0.0,
            policy: RetryPolicy::default(),
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }
}

/// Transfer template plus the translation template used when a record
/// still lacks its translation.
#[derive(Debug, Clone)]
pub struct Templates {
    pub transfer: PromptTemplate,
    pub translate: Option<PromptTemplate>,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            transfer: PromptTemplate::builtin(TemplateKind::TransferSpans),
            translate: None,
        }
    }
}

/// Serializable name of a translation prompt, used in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslatePrompt {
    Translate1,
    #[default]
    Translate2,
}

impl From<TranslatePrompt> for TemplateKind {
    fn from(p: TranslatePrompt) -> Self {
        match p {
            TranslatePrompt::Translate1 => TemplateKind::Translate1,
            TranslatePrompt::Translate2 => TemplateKind::Translate2,
        }
    }
}
