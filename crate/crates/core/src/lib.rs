//! Cross-lingual transfer of span annotations with a chat model: corpus
//! tooling, checkpointed record files, an LLM gateway, span resolution and
//! evaluation metrics.

pub mod corpus;
pub mod llm;
pub mod metrics;
pub mod record;
pub mod records;
pub mod span;
pub mod synthetic;
pub mod text;
pub mod transfer;

pub use record::{SentenceRecord, Side, DEFINITION_LABEL};
pub use span::CharSpan;
