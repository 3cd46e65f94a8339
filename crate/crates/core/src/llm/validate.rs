use serde_json::{Map, Value};

use crate::record::SentenceRecord;
use crate::transfer::RawRusSpan;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResponseViolation {
    #[error("expected {expected} spans in spans_rus, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("spans_rus[{index}] has id {got:?}, expected {expected:?}")]
    IdMismatch { index: usize, expected: String, got: String },
    #[error("spans_rus[{index}] has label {got:?}, expected {expected:?}")]
    LabelMismatch { index: usize, expected: String, got: String },
    #[error("{0}")]
    Malformed(String),
}

/// Checks a transfer reply against the request: `spans_rus` must pair up
/// one-to-one with the request spans, same id and label at each position.
///
/// Items are `[label, id, surface]`; the five-element form
/// `[start, end, label, id, surface]` is also accepted and its indices ignored.
pub fn validate_transfer_response(
    request: &SentenceRecord,
    parsed: &Map<String, Value>,
) -> Result<Vec<RawRusSpan>, ResponseViolation> {
    let items = parsed
        .get("spans_rus")
        .ok_or_else(|| ResponseViolation::Malformed("missing field spans_rus".into()))?
        .as_array()
        .ok_or_else(|| ResponseViolation::Malformed("spans_rus is not a list".into()))?;
    if items.len() != request.spans.len() {
        return Err(ResponseViolation::CountMismatch {
            expected: request.spans.len(),
            got: items.len(),
        });
    }
    let mut out = Vec::with_capacity(items.len());
    for (index, (item, want)) in items.iter().zip(&request.spans).enumerate() {
        let (label, id, surface) = triple(item)
            .ok_or_else(|| ResponseViolation::Malformed(format!("spans_rus[{index}] is not [label, id, text]")))?;
        if id != want.span_id {
            return Err(ResponseViolation::IdMismatch {
                index,
                expected: want.span_id.clone(),
                got: id,
            });
        }
        if label != want.label {
            return Err(ResponseViolation::LabelMismatch {
                index,
                expected: want.label.clone(),
                got: label,
            });
        }
        if surface.is_empty() {
            return Err(ResponseViolation::Malformed(format!("spans_rus[{index}] has empty text")));
        }
        out.push(RawRusSpan { label, span_id: id, surface });
    }
    Ok(out)
}

fn triple(item: &Value) -> Option<(String, String, String)> {
    let arr = item.as_array()?;
    let tail = match arr.len() {
        3 => &arr[..],
        5 => &arr[2..],
        _ => return None,
    };
    let label = tail[0].as_str()?.to_string();
    let id = match &tail[1] {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return None,
    };
    let surface = tail[2].as_str()?.to_string();
    Some((label, id, surface))
}

/// Pulls the translation out of a translate reply. A reply that echoes a
/// different `id` is rejected.
pub fn validate_translation_response(
    request: &SentenceRecord,
    parsed: &Map<String, Value>,
) -> Result<String, ResponseViolation> {
    if let Some(id) = parsed.get("id") {
        let got = match id {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        if got != request.id {
            return Err(ResponseViolation::IdMismatch {
                index: 0,
                expected: request.id.clone(),
                got,
            });
        }
    }
    match parsed.get("text_rus") {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(_) => Err(ResponseViolation::Malformed("text_rus is empty or not a string".into())),
        None => Err(ResponseViolation::Malformed("missing field text_rus".into())),
    }
}
