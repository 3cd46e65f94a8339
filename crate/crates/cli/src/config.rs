use std::path::{Path, PathBuf};
use std::time::Duration;

use annobridge::llm::{
    load_few_shot, ChatSettings, EndpointConfig, PromptTemplate, RetryPolicy, TemplateKind,
    Templates, TranslatePrompt,
};
use annobridge::metrics::{BleuConfig, Distance};
use annobridge::records::DEFAULT_MAX_ATTEMPTS;
use annobridge::transfer::TransferConfig;
use serde::{Deserialize, Serialize};

use crate::PipelineError;

/// Everything a pipeline run can be configured with. Loaded from TOML;
/// credentials come only from the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub chat: Option<EndpointConfig>,
    pub embedding: Option<EndpointConfig>,
    pub translate_prompt: TranslatePrompt,
    pub transfer: TransferConfig,
    pub workers: usize,
    /// Requests per record within one run.
    pub max_attempts: u32,
    pub backoff_ms: u64,
    /// Failed runs after which a record is given up on.
    pub ledger_max_attempts: u32,
    pub temperature: f64,
    pub few_shot_transfer: Option<PathBuf>,
    pub few_shot_translate: Option<PathBuf>,
    pub embedding_batch_size: usize,
    pub bleu: BleuConfig,
    pub distance: Distance,
    /// JSONL audit log of every chat request and reply.
    pub transcript: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            chat: None,
            embedding: None,
            translate_prompt: TranslatePrompt::default(),
            transfer: TransferConfig::default(),
            workers: 4,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            backoff_ms: 500,
            ledger_max_attempts: DEFAULT_MAX_ATTEMPTS,
            temperature: 0.0,
            few_shot_transfer: None,
            few_shot_translate: None,
            embedding_batch_size: 32,
            bleu: BleuConfig::default(),
            distance: Distance::Cosine,
            transcript: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        if self.max_attempts == 0 || self.ledger_max_attempts == 0 {
            return Err(PipelineError::Config("attempt limits must be at least 1".into()));
        }
        if self.embedding_batch_size == 0 {
            return Err(PipelineError::Config("embedding_batch_size must be at least 1".into()));
        }
        self.transfer.validate().map_err(PipelineError::Config)
    }

    pub fn chat_settings(&self, mock: bool) -> ChatSettings {
        let model = match (&self.chat, mock) {
            (Some(c), false) => c.model.clone(),
            _ => "mock".to_string(),
        };
        let backoff = Duration::from_millis(if mock { 0 } else { self.backoff_ms });
        ChatSettings {
            model,
            temperature: self.temperature,
            policy: RetryPolicy {
                max_attempts: self.max_attempts,
                backoff_base: backoff,
                backoff_cap: if mock { Duration::ZERO } else { Duration::from_secs(30) },
            },
        }
    }

    pub fn translate_template(&self) -> Result<PromptTemplate, PipelineError> {
        let mut t = PromptTemplate::builtin(TemplateKind::from(self.translate_prompt));
        if let Some(path) = &self.few_shot_translate {
            t = t.with_few_shot(load_few_shot(path)?);
        }
        Ok(t)
    }

    pub fn templates(&self) -> Result<Templates, PipelineError> {
        let mut transfer = PromptTemplate::builtin(TemplateKind::TransferSpans);
        if let Some(path) = &self.few_shot_transfer {
            transfer = transfer.with_few_shot(load_few_shot(path)?);
        }
        Ok(Templates { transfer, translate: None })
    }
}
