use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::MetricsError;
use crate::llm::{BackendError, EndpointConfig, HttpEndpoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    /// Rejects empty, non-finite and all-zero vectors.
    pub fn new(values: Vec<f64>) -> Result<Self, MetricsError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::ZeroVector);
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(MetricsError::ZeroVector);
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self { values: self.values.iter().map(|v| v / n).collect() }
    }
}

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = MetricsError;
    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.values
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    /// `1 - cos(u, v)`, in [0, 2].
    #[default]
    Cosine,
    /// Euclidean distance between the L2-normalized vectors, in [0, 2].
    Euclidean,
}

fn check_dims(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<(), MetricsError> {
    if u.dim() != v.dim() {
        return Err(MetricsError::DimMismatch { left: u.dim(), right: v.dim() });
    }
    Ok(())
}

pub fn cosine_distance(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, MetricsError> {
    check_dims(u, v)?;
    let dot: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    let cos = dot / (u.norm() * v.norm());
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

pub fn euclidean_distance(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, MetricsError> {
    check_dims(u, v)?;
    let (u, v) = (u.normalized(), v.normalized());
    Ok(u.values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

impl Distance {
    pub fn between(self, u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, MetricsError> {
        match self {
            Distance::Cosine => cosine_distance(u, v),
            Distance::Euclidean => euclidean_distance(u, v),
        }
    }
}

fn mean_distance(
    a: &[EmbeddingVector],
    b: &[EmbeddingVector],
    d: Distance,
) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut sum = 0.0;
    for (u, v) in a.iter().zip(b) {
        sum += d.between(u, v)?;
    }
    Ok(sum / a.len() as f64)
}

/// Mean distance between paired gold and system translation embeddings.
pub fn bleu_like_metric(
    gold_ru: &[EmbeddingVector],
    sys_ru: &[EmbeddingVector],
    d: Distance,
) -> Result<f64, MetricsError> {
    mean_distance(gold_ru, sys_ru, d)
}

/// `mean d(en, gold_ru) - mean d(en, sys_ru)`. Negative when system
/// translations sit farther from the source than the gold ones.
pub fn parallel_comparison(
    en: &[EmbeddingVector],
    gold_ru: &[EmbeddingVector],
    sys_ru: &[EmbeddingVector],
    d: Distance,
) -> Result<f64, MetricsError> {
    if en.len() != sys_ru.len() {
        return Err(MetricsError::LengthMismatch { left: en.len(), right: sys_ru.len() });
    }
    Ok(mean_distance(en, gold_ru, d)? - mean_distance(en, sys_ru, d)?)
}

/// A service turning texts into vectors, one per text, in order.
pub trait EmbeddingBackend: Send + Sync {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError>;
}

/// Embeds `texts` in batches of at most `batch_size`. All vectors must
/// share one dimension.
pub fn embed<B: EmbeddingBackend + ?Sized>(
    backend: &B,
    texts: &[String],
    batch_size: usize,
) -> Result<Vec<EmbeddingVector>, MetricsError> {
    if batch_size == 0 {
        return Err(MetricsError::Config("embedding batch size must be at least 1".into()));
    }
    let mut out: Vec<EmbeddingVector> = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(batch_size) {
        let vectors = backend.embed_batch(chunk).map_err(MetricsError::Backend)?;
        if vectors.len() != chunk.len() {
            return Err(MetricsError::Backend(BackendError::Protocol(format!(
                "asked for {} embeddings, got {}",
                chunk.len(),
                vectors.len()
            ))));
        }
        for values in vectors {
            let v = EmbeddingVector::new(values)?;
            if let Some(first) = out.first() {
                if first.dim() != v.dim() {
                    return Err(MetricsError::DimInconsistent {
                        expected: first.dim(),
                        got: v.dim(),
                        index: out.len(),
                    });
                }
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// Client for `POST <base_url>/embeddings`.
#[derive(Debug, Clone)]
pub struct HttpEmbeddingBackend {
    endpoint: HttpEndpoint,
}

impl HttpEmbeddingBackend {
    pub fn new(config: EndpointConfig) -> Result<Self, BackendError> {
        Ok(Self { endpoint: HttpEndpoint::new(config)? })
    }
}

impl EmbeddingBackend for HttpEmbeddingBackend {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        let body = json!({"model": self.endpoint.config().model, "input": texts});
        let reply = self.endpoint.post_json("embeddings", &body)?;
        let data = reply
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::Protocol("embedding response lacks data".into()))?;
        let mut items: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
        for (pos, item) in data.iter().enumerate() {
            let index = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            let vector: Vec<f64> = item
                .get("embedding")
                .cloned()
                .and_then(|v| serde_json::from_value(v).ok())
                .ok_or_else(|| BackendError::Protocol(format!("data[{pos}] has no numeric embedding")))?;
            items.push((index, vector));
        }
        items.sort_by_key(|(i, _)| *i);
        Ok(items.into_iter().map(|(_, v)| v).collect())
    }
}

/// Offline embedder: hashed character trigrams plus a constant component,
/// so equal texts get equal vectors and overlapping texts land close.
#[derive(Debug)]
pub struct MockEmbedder {
    dim: usize,
    calls: AtomicUsize,
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(2), calls: AtomicUsize::new(0) }
    }

    /// Batch requests received.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[0] = 1.0;
        let chars: Vec<char> = format!("  {}  ", text.to_lowercase()).chars().collect();
        for gram in chars.windows(3) {
            let mut h = DefaultHasher::new();
            gram.hash(&mut h);
            v[1 + (h.finish() as usize) % (self.dim - 1)] += 1.0;
        }
        v
    }
}

impl Default for MockEmbedder {
    fn default() -> Self {
        Self::new(64)
    }
}

impl EmbeddingBackend for MockEmbedder {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(texts.iter().map(|t| self.vector(t)).collect())
    }
}
