//! Labeled character spans.

use serde::{Deserialize, Serialize};

use crate::text;

/// A labeled half-open code-point interval `[start, end)` over some owning text.
///
/// On the wire a span is the five-element list `[start, end, label, id, surface]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "SpanTuple", try_from = "SpanTuple")]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub span_id: String,
    pub surface: String,
}

impl CharSpan {
    /// Builds a span by slicing `owner`. Returns `None` for an empty or
    /// out-of-bounds interval.
    pub fn from_text(
        owner: &str,
        start: usize,
        end: usize,
        label: impl Into<String>,
        span_id: impl Into<String>,
    ) -> Option<Self> {
        if start >= end {
            return None;
        }
        let surface = text::slice(owner, start, end)?.to_string();
        Some(Self {
            start,
            end,
            label: label.into(),
            span_id: span_id.into(),
            surface,
        })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// True when the half-open intervals share at least one code point.
    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Checks `start < end` and that `surface` is the exact slice of `owner`.
    pub fn is_consistent_with(&self, owner: &str) -> bool {
        self.start < self.end && text::slice(owner, self.start, self.end) == Some(&self.surface)
    }
}

#[derive(Serialize, Deserialize)]
struct SpanTuple(usize, usize, String, SpanIdRepr, String);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpanIdRepr {
    Str(String),
    Int(i64),
}

impl From<CharSpan> for SpanTuple {
    fn from(s: CharSpan) -> Self {
        SpanTuple(s.start, s.end, s.label, SpanIdRepr::Str(s.span_id), s.surface)
    }
}

impl TryFrom<SpanTuple> for CharSpan {
    type Error = String;

    fn try_from(t: SpanTuple) -> Result<Self, Self::Error> {
        let SpanTuple(start, end, label, id, surface) = t;
        if start >= end {
            return Err(format!("span [{start}, {end}) is empty or reversed"));
        }
        let span_id = match id {
            SpanIdRepr::Str(s) => s,
            SpanIdRepr::Int(n) => n.to_string(),
        };
        Ok(CharSpan {
            start,
            end,
            label,
            span_id,
            surface,
        })
    }
}
