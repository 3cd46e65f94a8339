//! Pipeline stages behind the `annobridge` command: convert, audit,
//! translate, transfer, evaluate and export.

pub mod batch;
pub mod commands;
pub mod config;

use std::path::Path;

use annobridge::corpus::CorpusError;
use annobridge::llm::GatewayError;
use annobridge::metrics::MetricsError;
use annobridge::records::RecordsError;

pub use config::PipelineConfig;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Records {
        path: String,
        #[source]
        source: RecordsError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Gateway(GatewayError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn records(path: &Path, source: RecordsError) -> Self {
        PipelineError::Records { path: path.display().to_string(), source }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.display().to_string(), source }
    }

    /// 1 for input and configuration problems, 2 for failures of an
    /// external service.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Gateway(_) | PipelineError::Metrics(MetricsError::Backend(_)) => 2,
            _ => 1,
        }
    }
}

impl From<GatewayError> for PipelineError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Config(msg) => PipelineError::Config(msg),
            other => PipelineError::Gateway(other),
        }
    }
}
