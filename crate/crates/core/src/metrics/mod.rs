//! Span-match classification, corpus BLEU and embedding-based translation
//! metrics.

mod bleu;
mod embedding;
mod matching;

pub use bleu::{bleu, bleu_with, tokenize, BleuConfig};
pub use embedding::{
    bleu_like_metric, cosine_distance, embed, euclidean_distance, parallel_comparison, Distance,
    EmbeddingBackend, EmbeddingVector, HttpEmbeddingBackend, MockEmbedder,
};
pub use matching::{
    classify_interval, classify_match, transfer_report, MatchClass, MatchCounts, TransferReport,
};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::llm::BackendError;
use crate::record::SentenceRecord;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("zero, empty or non-finite vector")]
    ZeroVector,
    #[error("embedding {index} has dimension {got}, expected {expected}")]
    DimInconsistent { expected: usize, got: usize, index: usize },
    #[error("record id {id:?} occurs more than once in the {side} set")]
    IdCollision { id: String, side: String },
    #[error("record {id:?} has no {field} in the {side} set")]
    MissingTranslation { id: String, field: String, side: String },
    #[error("{0}")]
    Config(String),
    #[error("embedding service: {0}")]
    Backend(BackendError),
}

/// Source text, gold translation and system translation of one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationTriple {
    pub id: String,
    pub en: String,
    pub gold_ru: String,
    pub sys_ru: String,
}

/// Pairs gold and system records by id. Every gold record needs a system
/// counterpart and both need `text_rus`.
pub fn pair_translations(
    gold: &[SentenceRecord],
    sys: &[SentenceRecord],
) -> Result<Vec<TranslationTriple>, MetricsError> {
    let mut by_id: HashMap<&str, &SentenceRecord> = HashMap::new();
    for s in sys {
        if by_id.insert(&s.id, s).is_some() {
            return Err(MetricsError::IdCollision { id: s.id.clone(), side: "system".into() });
        }
    }
    if gold.len() != sys.len() {
        return Err(MetricsError::LengthMismatch { left: gold.len(), right: sys.len() });
    }
    let missing = |id: &str, side: &str| MetricsError::MissingTranslation {
        id: id.to_string(),
        field: "text_rus".into(),
        side: side.into(),
    };
    let mut out = Vec::with_capacity(gold.len());
    let mut seen = std::collections::HashSet::new();
    for g in gold {
        if !seen.insert(g.id.as_str()) {
            return Err(MetricsError::IdCollision { id: g.id.clone(), side: "gold".into() });
        }
        let s = by_id.get(g.id.as_str()).ok_or_else(|| MetricsError::MissingTranslation {
            id: g.id.clone(),
            field: "record".into(),
            side: "system".into(),
        })?;
        out.push(TranslationTriple {
            id: g.id.clone(),
            en: g.text.clone(),
            gold_ru: g.text_rus.clone().ok_or_else(|| missing(&g.id, "gold"))?,
            sys_ru: s.text_rus.clone().ok_or_else(|| missing(&g.id, "system"))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationScores {
    pub records: usize,
    pub bleu: f64,
    /// Absent when embedding metrics were skipped.
    pub bleu_like: Option<f64>,
    pub parallel_comparison: Option<f64>,
    pub distance: Distance,
}

/// BLEU over the triples, plus the embedding metrics when an embedder is
/// given.
pub fn translation_scores(
    triples: &[TranslationTriple],
    bleu_cfg: &BleuConfig,
    embedder: Option<(&dyn EmbeddingBackend, usize)>,
    distance: Distance,
) -> Result<TranslationScores, MetricsError> {
    let sys: Vec<&str> = triples.iter().map(|t| t.sys_ru.as_str()).collect();
    let gold: Vec<&str> = triples.iter().map(|t| t.gold_ru.as_str()).collect();
    let bleu = bleu_with(&sys, &gold, bleu_cfg)?;
    let (bleu_like, parallel) = match embedder {
        None => (None, None),
        Some((backend, batch)) => {
            let texts = |f: fn(&TranslationTriple) -> &String| -> Vec<String> {
                triples.iter().map(|t| f(t).clone()).collect()
            };
            let en = embed(backend, &texts(|t| &t.en), batch)?;
            let g = embed(backend, &texts(|t| &t.gold_ru), batch)?;
            let s = embed(backend, &texts(|t| &t.sys_ru), batch)?;
            (
                Some(bleu_like_metric(&g, &s, distance)?),
                Some(parallel_comparison(&en, &g, &s, distance)?),
            )
        }
    };
    Ok(TranslationScores {
        records: triples.len(),
        bleu,
        bleu_like,
        parallel_comparison: parallel,
        distance,
    })
}

impl fmt::Display for TranslationScores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |v: Option<f64>| v.map_or_else(|| "skipped".to_string(), |x| format!("{x:.4}"));
        writeln!(f, "{:<22} {:>10}", "Records", self.records)?;
        writeln!(f, "{:<22} {:>10}", "BLEU-like", cell(self.bleu_like))?;
        writeln!(f, "{:<22} {:>10}", "Parallel comparison", cell(self.parallel_comparison))?;
        writeln!(f, "{:<22} {:>10}", "BLEU score", format!("{:.4}", self.bleu))?;
        let d = match self.distance {
            Distance::Cosine => "cosine",
            Distance::Euclidean => "euclidean",
        };
        writeln!(f, "distance: {d}; parallel comparison = mean d(en, gold) - mean d(en, system)")
    }
}
