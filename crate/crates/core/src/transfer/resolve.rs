use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::locate::{best_window, locate_exact, within};
use crate::record::SentenceRecord;
use crate::span::CharSpan;

/// A target-language surface the model claims corresponds to a source span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRusSpan {
    pub label: String,
    pub span_id: String,
    pub surface: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolveMethod {
    Exact,
    Fuzzy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSpan {
    pub span: CharSpan,
    pub method: ResolveMethod,
    pub fuzzy_score: Option<f64>,
    /// Ids of other resolved spans in the same record that this one overlaps.
    pub overlaps_with: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnresolvedReason {
    /// No translation to search in.
    MissingTranslation,
    EmptySurface,
    /// Exact search failed and fuzzy search is disabled.
    NotFound,
    /// Fuzzy search found no window of admissible length.
    NoCandidate,
    /// The best fuzzy window scored above the threshold.
    AboveThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedSpan {
    pub span_id: String,
    pub label: String,
    pub needle: String,
    pub reason: UnresolvedReason,
    pub best_score: Option<f64>,
}

/// How repeated identical surfaces bind to repeated occurrences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccurrencePolicy {
    /// The k-th needle with a given surface binds the k-th occurrence.
    #[default]
    OrderedCursor,
    /// Every needle binds the leftmost occurrence.
    Leftmost,
}

pub const DEFAULT_FUZZY_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    /// Maximum normalized edit distance accepted by fuzzy search.
    pub fuzzy_threshold: f64,
    pub fuzzy_enabled: bool,
    pub occurrence_policy: OccurrencePolicy,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            fuzzy_threshold: DEFAULT_FUZZY_THRESHOLD,
            fuzzy_enabled: true,
            occurrence_policy: OccurrencePolicy::OrderedCursor,
        }
    }
}

impl TransferConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..1.0).contains(&self.fuzzy_threshold) {
            return Err(format!(
                "fuzzy threshold must be in [0, 1), got {}",
                self.fuzzy_threshold
            ));
        }
        Ok(())
    }

    pub fn exact_only() -> Self {
        Self {
            fuzzy_enabled: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Resolution {
    pub resolved: Vec<ResolvedSpan>,
    pub unresolved: Vec<UnresolvedSpan>,
}

impl Resolution {
    /// Resolved spans as plain `CharSpan`s, in request order.
    pub fn spans(&self) -> Vec<CharSpan> {
        self.resolved.iter().map(|r| r.span.clone()).collect()
    }

    pub fn has_overlaps(&self) -> bool {
        self.resolved.iter().any(|r| !r.overlaps_with.is_empty())
    }
}

/// Binds each raw surface to an interval of `r.text_rus`: exact search
/// first, then (when enabled) fuzzy search from the same cursor. Never
/// fails; spans that cannot be placed land in `unresolved`.
pub fn resolve_spans(r: &SentenceRecord, raws: &[RawRusSpan], cfg: &TransferConfig) -> Resolution {
    let mut out = Resolution::default();
    let unresolved = |raw: &RawRusSpan, reason, best_score| UnresolvedSpan {
        span_id: raw.span_id.clone(),
        label: raw.label.clone(),
        needle: raw.surface.clone(),
        reason,
        best_score,
    };

    let Some(target) = r.text_rus.as_deref() else {
        out.unresolved = raws
            .iter()
            .map(|raw| unresolved(raw, UnresolvedReason::MissingTranslation, None))
            .collect();
        return out;
    };

    let mut cursors: HashMap<&str, usize> = HashMap::new();
    for raw in raws {
        if raw.surface.is_empty() {
            out.unresolved
                .push(unresolved(raw, UnresolvedReason::EmptySurface, None));
            continue;
        }
        let cursor = match cfg.occurrence_policy {
            OccurrencePolicy::OrderedCursor => cursors.get(raw.surface.as_str()).copied().unwrap_or(0),
            OccurrencePolicy::Leftmost => 0,
        };

        let hit = if let Some(range) = locate_exact(target, &raw.surface, cursor) {
            Ok((range, ResolveMethod::Exact, None))
        } else if !cfg.fuzzy_enabled {
            Err((UnresolvedReason::NotFound, None))
        } else {
            match best_window(target, &raw.surface, cfg.fuzzy_threshold, cursor) {
                None => Err((UnresolvedReason::NoCandidate, None)),
                Some(m) if within(&m, cfg.fuzzy_threshold) => {
                    Ok((m.range, ResolveMethod::Fuzzy, Some(m.score)))
                }
                Some(m) => Err((UnresolvedReason::AboveThreshold, Some(m.score))),
            }
        };

        match hit {
            Ok((range, method, fuzzy_score)) => {
                cursors.insert(raw.surface.as_str(), range.end);
                let span = CharSpan::from_text(target, range.start, range.end, &raw.label, &raw.span_id)
                    .expect("located ranges are non-empty and in bounds");
                out.resolved.push(ResolvedSpan {
                    span,
                    method,
                    fuzzy_score,
                    overlaps_with: Vec::new(),
                });
            }
            Err((reason, best)) => out.unresolved.push(unresolved(raw, reason, best)),
        }
    }

    let n = out.resolved.len();
    for i in 0..n {
        for j in 0..n {
            if i != j && out.resolved[i].span.overlaps(&out.resolved[j].span) {
                let other = out.resolved[j].span.span_id.clone();
                out.resolved[i].overlaps_with.push(other);
            }
        }
    }
    out
}
