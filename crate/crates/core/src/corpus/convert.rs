use serde_json::Value;

use super::bio::{validate_bio, BioTag};
use super::conll::{ConllSentence, TokenRow};
use super::CorpusError;
use crate::record::{SentenceRecord, Side};
use crate::span::CharSpan;
use crate::text;

/// Extra-field key holding the source file named in the CoNLL rows.
pub const SOURCE_FILE_KEY: &str = "source_file";
/// Extra-field key holding the opaque trailing CoNLL columns, one list per token.
pub const CONLL_EXTRA_KEY: &str = "conll_extra";

/// Converts a valid BIO sentence into a record.
///
/// Tokens are joined with single spaces; each maximal B/I run becomes a span
/// with id `T<n>` (1-based, in order of appearance).
pub fn conll_to_record(s: &ConllSentence) -> Result<SentenceRecord, CorpusError> {
    let violations = validate_bio(s);
    if !violations.is_empty() {
        return Err(CorpusError::InvalidBio {
            sentence_id: s.sentence_id.clone(),
            violations,
        });
    }

    let mut text = String::new();
    let mut bounds = Vec::with_capacity(s.rows.len());
    let mut pos = 0;
    for (i, row) in s.rows.iter().enumerate() {
        if i > 0 {
            text.push(' ');
            pos += 1;
        }
        let len = text::char_len(&row.token);
        text.push_str(&row.token);
        bounds.push((pos, pos + len));
        pos += len;
    }

    // (label, first row, last row)
    let mut runs: Vec<(&str, usize, usize)> = Vec::new();
    for (i, row) in s.rows.iter().enumerate() {
        match BioTag::parse(&row.tag) {
            Some(BioTag::Begin(l)) => runs.push((l, i, i)),
            Some(BioTag::Inside(_)) => {
                if let Some(last) = runs.last_mut() {
                    last.2 = i;
                }
            }
            _ => {}
        }
    }

    let spans = runs
        .into_iter()
        .enumerate()
        .filter_map(|(n, (label, first, last))| {
            CharSpan::from_text(&text, bounds[first].0, bounds[last].1, label, format!("T{}", n + 1))
        })
        .collect();

    let mut record = SentenceRecord::new(s.sentence_id.clone(), text, spans);
    if let Some(first) = s.rows.first() {
        record
            .extra
            .insert(SOURCE_FILE_KEY.into(), Value::String(first.source_file.clone()));
    }
    if s.rows.iter().any(|r| !r.extra_cols.is_empty()) {
        let cols = s
            .rows
            .iter()
            .map(|r| Value::from(r.extra_cols.clone()))
            .collect();
        record.extra.insert(CONLL_EXTRA_KEY.into(), Value::Array(cols));
    }
    Ok(record)
}

/// Re-tokenizes one side of a record on whitespace and tags each token with
/// the span it intersects.
///
/// Offsets in the produced rows are relative to the record text. On the
/// source side, preserved trailing columns are re-emitted when the token
/// count still matches. A token touched by two spans is assigned to the
/// earlier one.
pub fn record_to_bio(r: &SentenceRecord, side: Side) -> Result<ConllSentence, CorpusError> {
    let missing = |field: &str| CorpusError::MissingSide {
        record_id: r.id.clone(),
        field: field.to_string(),
    };
    let text = r
        .side_text(side)
        .ok_or_else(|| missing("text_rus"))?;
    let spans = r
        .side_spans(side)
        .ok_or_else(|| missing("spans_rus"))?;

    let mut ordered: Vec<&CharSpan> = spans.iter().collect();
    ordered.sort_by_key(|s| (s.start, s.end));
    let mut offending = Vec::new();
    for pair in ordered.windows(2) {
        if pair[0].overlaps(pair[1]) {
            for s in pair {
                if !offending.contains(&s.span_id) {
                    offending.push(s.span_id.clone());
                }
            }
        }
    }
    if !offending.is_empty() {
        return Err(CorpusError::OverlappingSpans {
            record_id: r.id.clone(),
            span_ids: offending,
        });
    }

    let tokens = text::whitespace_tokens(text);
    let source_file = match (side, r.extra.get(SOURCE_FILE_KEY)) {
        (Side::Source, Some(Value::String(f))) => f.clone(),
        _ => r.id.clone(),
    };
    let extra_cols: Option<Vec<Vec<String>>> = match (side, r.extra.get(CONLL_EXTRA_KEY)) {
        (Side::Source, Some(v)) => serde_json::from_value(v.clone())
            .ok()
            .filter(|cols: &Vec<Vec<String>>| cols.len() == tokens.len()),
        _ => None,
    };

    let mut rows = Vec::with_capacity(tokens.len());
    let mut cursor = 0;
    let mut last_span: Option<usize> = None;
    for (i, (range, tok)) in tokens.iter().enumerate() {
        while cursor < ordered.len() && ordered[cursor].end <= range.start {
            cursor += 1;
        }
        let hit = (cursor < ordered.len() && ordered[cursor].start < range.end).then_some(cursor);
        let tag = match hit {
            Some(k) if last_span == Some(k) => format!("I-{}", ordered[k].label),
            Some(k) => format!("B-{}", ordered[k].label),
            None => "O".to_string(),
        };
        last_span = hit;
        rows.push(TokenRow {
            token: tok.to_string(),
            source_file: source_file.clone(),
            start_char: range.start,
            end_char: range.end,
            tag,
            extra_cols: extra_cols
                .as_ref()
                .map(|c| c[i].clone())
                .unwrap_or_default(),
        });
    }

    Ok(ConllSentence {
        sentence_id: r.id.clone(),
        rows,
    })
}
