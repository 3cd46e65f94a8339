//! Binding model-returned target-language surfaces to character spans.

mod locate;
mod resolve;

pub use locate::{fuzzy_locate, levenshtein, locate_exact, FuzzyMatch};
pub use resolve::{
    resolve_spans, OccurrencePolicy, RawRusSpan, Resolution, ResolveMethod, ResolvedSpan,
    TransferConfig, UnresolvedReason, UnresolvedSpan, DEFAULT_FUZZY_THRESHOLD,
};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::llm::{
    chat_validated, extract_json, render_prompt, validate_transfer_response,
    validate_translation_response, ChatBackend, ChatSettings, GatewayError, PromptTemplate,
    Templates,
};
use crate::record::SentenceRecord;

/// Extra key under which `transfer_record` stores per-record diagnostics.
pub const DIAGNOSTICS_KEY: &str = "transfer_diagnostics";

/// One line of the unresolved-span sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticEntry {
    pub record_id: String,
    pub span_id: String,
    pub reason: UnresolvedReason,
    pub needle: String,
    pub best_score: Option<f64>,
}

impl DiagnosticEntry {
    pub fn from_resolution(record_id: &str, res: &Resolution) -> Vec<Self> {
        res.unresolved
            .iter()
            .map(|u| Self {
                record_id: record_id.to_string(),
                span_id: u.span_id.clone(),
                reason: u.reason,
                needle: u.needle.clone(),
                best_score: u.best_score,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub record: SentenceRecord,
    pub resolution: Resolution,
    /// Requests spent on the transfer call (0 when the record had no spans).
    pub attempts: u32,
    /// Requests spent translating first, when the record lacked `text_rus`.
    pub translate_attempts: u32,
}

/// Fills `text_rus` with the model's translation. Returns the updated record
/// and the number of requests sent.
pub fn translate_record<B: ChatBackend + ?Sized>(
    r: &SentenceRecord,
    backend: &B,
    template: &PromptTemplate,
    settings: &ChatSettings,
) -> Result<(SentenceRecord, u32), GatewayError> {
    let request = render_prompt(template, r, &settings.model, settings.temperature)?;
    let (exchange, text) = chat_validated(backend, &request, &settings.policy, |raw| {
        let obj = extract_json(raw).map_err(|e| e.to_string())?;
        validate_translation_response(r, &obj).map_err(|e| e.to_string())
    })?;
    let mut out = r.clone();
    out.text_rus = Some(text);
    Ok((out, exchange.attempts))
}

/// Projects the spans of `r` onto its translation: render, chat until the
/// reply validates, then resolve the surfaces against `text_rus`. Records
/// without a translation are translated first when `templates.translate`
/// is set.
pub fn transfer_record<B: ChatBackend + ?Sized>(
    r: &SentenceRecord,
    backend: &B,
    templates: &Templates,
    cfg: &TransferConfig,
    settings: &ChatSettings,
) -> Result<TransferOutcome, GatewayError> {
    let (record, translate_attempts) = match (&r.text_rus, &templates.translate) {
        (Some(_), _) => (r.clone(), 0),
        (None, Some(t)) => translate_record(r, backend, t, settings)?,
        (None, None) => return Err(GatewayError::MissingField("text_rus".into())),
    };

    let (raws, attempts) = if record.spans.is_empty() {
        (Vec::new(), 0)
    } else {
        let request = render_prompt(&templates.transfer, &record, &settings.model, settings.temperature)?;
        let (exchange, raws) = chat_validated(backend, &request, &settings.policy, |raw| {
            let obj = extract_json(raw).map_err(|e| e.to_string())?;
            validate_transfer_response(&record, &obj).map_err(|e| e.to_string())
        })?;
        (raws, exchange.attempts)
    };

    let resolution = resolve_spans(&record, &raws, cfg);
    let mut record = record;
    record.spans_rus = Some(resolution.spans());
    record.extra.insert(
        DIAGNOSTICS_KEY.into(),
        json!({
            "attempts": attempts,
            "fuzzy": resolution
                .resolved
                .iter()
                .filter(|s| s.method == ResolveMethod::Fuzzy)
                .map(|s| json!({"span_id": s.span.span_id, "score": s.fuzzy_score}))
                .collect::<Vec<_>>(),
            "overlaps": resolution
                .resolved
                .iter()
                .filter(|s| !s.overlaps_with.is_empty())
                .map(|s| json!({"span_id": s.span.span_id, "overlaps_with": s.overlaps_with}))
                .collect::<Vec<_>>(),
            "unresolved": resolution.unresolved,
        }),
    );
    Ok(TransferOutcome {
        record,
        resolution,
        attempts,
        translate_attempts,
    })
}
