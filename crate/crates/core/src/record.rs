//! The JSON-serializable unit of work that flows through every pipeline stage.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::span::CharSpan;

/// Label whose presence marks a sentence as definition-bearing.
pub const DEFINITION_LABEL: &str = "Definition";

/// Which language side of a record to operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Source,
    Target,
}

/// One sentence with its source-language annotation and, once the pipeline
/// has run, its translation and projected annotation.
///
/// Fields not modelled here are kept in `extra` and written back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RecordWire", from = "RecordWire")]
pub struct SentenceRecord {
    pub id: String,
    pub text: String,
    pub spans: Vec<CharSpan>,
    pub text_rus: Option<String>,
    pub spans_rus: Option<Vec<CharSpan>>,
    pub extra: Map<String, Value>,
}

impl SentenceRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, spans: Vec<CharSpan>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            spans,
            text_rus: None,
            spans_rus: None,
            extra: Map::new(),
        }
    }

    /// Sentence-level definition flag, derived from the source spans.
    pub fn has_definition(&self) -> bool {
        self.spans.iter().any(|s| s.label == DEFINITION_LABEL)
    }

    pub fn side_text(&self, side: Side) -> Option<&str> {
        match side {
            Side::Source => Some(&self.text),
            Side::Target => self.text_rus.as_deref(),
        }
    }

    pub fn side_spans(&self, side: Side) -> Option<&[CharSpan]> {
        match side {
            Side::Source => Some(&self.spans),
            Side::Target => self.spans_rus.as_deref(),
        }
    }

    /// Ids that occur more than once among the source spans.
    pub fn duplicate_span_ids(&self) -> Vec<String> {
        let mut seen = std::collections::BTreeSet::new();
        let mut dups = std::collections::BTreeSet::new();
        for s in &self.spans {
            if !seen.insert(s.span_id.as_str()) {
                dups.insert(s.span_id.clone());
            }
        }
        dups.into_iter().collect()
    }
}

#[derive(Serialize, Deserialize)]
struct RecordWire {
    id: IdRepr,
    text: String,
    #[serde(default)]
    spans: Vec<CharSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text_rus: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spans_rus: Option<Vec<CharSpan>>,
    // Derived on write, ignored on read.
    #[serde(default, skip_deserializing)]
    has_definition: bool,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IdRepr {
    Str(String),
    Int(i64),
}

impl From<SentenceRecord> for RecordWire {
    fn from(r: SentenceRecord) -> Self {
        let has_definition = r.has_definition();
        RecordWire {
            id: IdRepr::Str(r.id),
            text: r.text,
            spans: r.spans,
            text_rus: r.text_rus,
            spans_rus: r.spans_rus,
            has_definition,
            extra: r.extra,
        }
    }
}

impl From<RecordWire> for SentenceRecord {
    fn from(w: RecordWire) -> Self {
        let id = match w.id {
            IdRepr::Str(s) => s,
            IdRepr::Int(n) => n.to_string(),
        };
        let mut extra = w.extra;
        extra.remove("has_definition");
        SentenceRecord {
            id,
            text: w.text,
            spans: w.spans,
            text_rus: w.text_rus,
            spans_rus: w.spans_rus,
            extra,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> SentenceRecord {
        let text = "Mitosis is cell division";
        let spans = vec![
            CharSpan::from_text(text, 0, 7, "Term", "T1").unwrap(),
            CharSpan::from_text(text, 11, 24, "Definition", "T2").unwrap(),
        ];
        SentenceRecord::new("dev:1", text, spans)
    }

    #[test]
    fn field_names_and_order() {
        let r = sample();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"id":"dev:1","text":"Mitosis is cell division","spans":[[0,7,"Term","T1","Mitosis"],[11,24,"Definition","T2","cell division"]],"has_definition":true}"#
        );
    }

    #[test]
    fn unknown_fields_survive() {
        let v = json!({"id": 5, "text": "x y", "source": "bio", "has_definition": true});
        let r: SentenceRecord = serde_json::from_value(v).unwrap();
        assert_eq!(r.id, "5");
        assert!(!r.has_definition());
        assert_eq!(r.extra.get("source"), Some(&json!("bio")));
        assert!(!r.extra.contains_key("has_definition"));
        let back = serde_json::to_value(&r).unwrap();
        assert_eq!(back["source"], json!("bio"));
        assert_eq!(back["has_definition"], json!(false));
    }

    #[test]
    fn duplicate_span_ids_found() {
        let mut r = sample();
        r.spans[1].span_id = "T1".into();
        assert_eq!(r.duplicate_span_ids(), vec!["T1".to_string()]);
    }
}
