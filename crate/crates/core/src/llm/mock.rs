//! Deterministic offline stand-in for a chat endpoint.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{json, Map, Value};

use super::client::{BackendError, ChatBackend, ChatReply, ChatRequest};
use crate::record::SentenceRecord;

/// A snippet of code in place of JSON, the way small models sometimes answer.
pub const CODE_REPLY: &str = "def transfer_spans(record):\n    \
    result = dict(record)\n    \
    result['spans_rus'] = [[s[2], s[3], s[4]] for s in record['spans']]\n    \
    return result\n";

pub const PROSE_REPLY: &str = "I'm sorry, but I can't determine the corresponding spans for this text.";

/// What the mock does for a record.
#[derive(Debug, Clone)]
pub enum MockBehavior {
    /// Answer from a gold record: its `text_rus` for translation requests,
    /// its `spans_rus` surfaces for transfer requests.
    EchoGold(SentenceRecord),
    /// Translate by copying the source text; transfer by returning the
    /// source span surfaces.
    Echo,
    /// A fixed reply string.
    Canned(String),
    /// Transport-level failure for the first `n` calls, then `then`.
    FailTimes { n: usize, then: Box<MockBehavior> },
    /// Reply with Python code.
    EmitCode,
    /// Reply with prose and no JSON.
    Prose,
    /// The k-th call for the record uses the k-th behavior; the last repeats.
    Sequence(Vec<MockBehavior>),
}

/// Scripted chat backend. Records are identified by the `id` in the last
/// user message; unscripted ids fall back to the default behavior or fail
/// with [`BackendError::UnknownId`].
#[derive(Debug, Default)]
pub struct MockLlm {
    script: HashMap<String, MockBehavior>,
    default: Option<MockBehavior>,
    calls: AtomicUsize,
    per_id: Mutex<HashMap<String, usize>>,
}

impl MockLlm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every record gets the same behavior.
    pub fn uniform(behavior: MockBehavior) -> Self {
        Self {
            default: Some(behavior),
            ..Self::default()
        }
    }

    /// Echo-gold script over a gold set.
    pub fn echo_gold<'a>(gold: impl IntoIterator<Item = &'a SentenceRecord>) -> Self {
        let mut m = Self::new();
        for g in gold {
            m.script.insert(g.id.clone(), MockBehavior::EchoGold(g.clone()));
        }
        m
    }

    pub fn with(mut self, id: impl Into<String>, behavior: MockBehavior) -> Self {
        self.script.insert(id.into(), behavior);
        self
    }

    pub fn with_default(mut self, behavior: MockBehavior) -> Self {
        self.default = Some(behavior);
        self
    }

    /// Total requests received.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn calls_for(&self, id: &str) -> usize {
        self.per_id.lock().expect("mock lock").get(id).copied().unwrap_or(0)
    }

    fn respond(
        behavior: &MockBehavior,
        call: usize,
        input: &Map<String, Value>,
    ) -> Result<String, BackendError> {
        let transfer = input.contains_key("spans") && input.contains_key("text_rus");
        match behavior {
            MockBehavior::Canned(s) => Ok(s.clone()),
            MockBehavior::EmitCode => Ok(CODE_REPLY.to_string()),
            MockBehavior::Prose => Ok(PROSE_REPLY.to_string()),
            MockBehavior::FailTimes { n, then } => {
                if call <= *n {
                    Err(BackendError::Transport(format!("scripted failure {call} of {n}")))
                } else {
                    Self::respond(then, call - n, input)
                }
            }
            MockBehavior::Sequence(steps) => match steps.get(call - 1).or(steps.last()) {
                Some(step) => Self::respond(step, call, input),
                None => Err(BackendError::Protocol("empty mock sequence".into())),
            },
            MockBehavior::Echo => {
                let mut out = input.clone();
                if transfer {
                    let spans = input["spans"].as_array().cloned().unwrap_or_default();
                    let rus: Vec<Value> = spans
                        .iter()
                        .map(|s| json!([s[2], s[3], s[4]]))
                        .collect();
                    out.insert("spans_rus".into(), Value::Array(rus));
                } else {
                    out.insert("text_rus".into(), input.get("text").cloned().unwrap_or_default());
                }
                Ok(Value::Object(out).to_string())
            }
            MockBehavior::EchoGold(gold) => {
                let mut out = input.clone();
                if transfer {
                    let spans = gold.spans_rus.as_ref().ok_or_else(|| {
                        BackendError::Protocol(format!("gold record {} has no spans_rus", gold.id))
                    })?;
                    let rus: Vec<Value> = spans
                        .iter()
                        .map(|s| json!([s.label, s.span_id, s.surface]))
                        .collect();
                    out.insert("spans_rus".into(), Value::Array(rus));
                } else {
                    let text = gold.text_rus.as_ref().ok_or_else(|| {
                        BackendError::Protocol(format!("gold record {} has no text_rus", gold.id))
                    })?;
                    out.insert("text_rus".into(), json!(text));
                }
                Ok(Value::Object(out).to_string())
            }
        }
    }
}

impl ChatBackend for MockLlm {
    fn complete(&self, request: &ChatRequest) -> Result<ChatReply, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let input: Map<String, Value> = request
            .last_user_content()
            .and_then(|c| serde_json::from_str(c).ok())
            .ok_or_else(|| BackendError::Protocol("last user message is not a JSON object".into()))?;
        let id = match input.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(other) => other.to_string(),
            None => return Err(BackendError::UnknownId(String::new())),
        };
        let call = {
            let mut per_id = self.per_id.lock().expect("mock lock");
            let n = per_id.entry(id.clone()).or_insert(0);
            *n += 1;
            *n
        };
        let behavior = self
            .script
            .get(&id)
            .or(self.default.as_ref())
            .ok_or_else(|| BackendError::UnknownId(id.clone()))?;
        Self::respond(behavior, call, &input).map(|content| ChatReply { content, usage: None })
    }
}
