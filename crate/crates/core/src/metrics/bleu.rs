use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BleuConfig {
    pub max_n: usize,
    /// Add one to matched and total counts for n >= 2.
    pub smoothing: bool,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self { max_n: 4, smoothing: false }
    }
}

/// Lowercases, splits on whitespace and detaches every punctuation or symbol
/// character into its own token.
pub fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in s.split_whitespace() {
        let mut cur = String::new();
        for c in word.chars() {
            if c.is_alphanumeric() {
                cur.extend(c.to_lowercase());
            } else {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
    }
    out
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU with `max_n` = 4 and no smoothing.
pub fn bleu<S: AsRef<str>>(candidates: &[S], references: &[S]) -> Result<f64, MetricsError> {
    bleu_with(candidates, references, &BleuConfig::default())
}

/// Corpus-level BLEU: the geometric mean of clipped n-gram precisions,
/// pooled over the corpus, times the brevity penalty
/// `exp(min(0, 1 - r/c))`. Any zero precision makes the score zero.
pub fn bleu_with<S: AsRef<str>>(
    candidates: &[S],
    references: &[S],
    cfg: &BleuConfig,
) -> Result<f64, MetricsError> {
    if candidates.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if cfg.max_n == 0 {
        return Err(MetricsError::Config("BLEU max_n must be at least 1".into()));
    }

    let mut matched = vec![0usize; cfg.max_n];
    let mut total = vec![0usize; cfg.max_n];
    let (mut cand_len, mut ref_len) = (0usize, 0usize);
    for (c, r) in candidates.iter().zip(references) {
        let c = tokenize(c.as_ref());
        let r = tokenize(r.as_ref());
        cand_len += c.len();
        ref_len += r.len();
        for n in 1..=cfg.max_n {
            let rc = ngram_counts(&r, n);
            for (gram, k) in ngram_counts(&c, n) {
                matched[n - 1] += k.min(rc.get(gram).copied().unwrap_or(0));
            }
            total[n - 1] += c.len().saturating_sub(n - 1);
        }
    }
    if cand_len == 0 {
        return Ok(0.0);
    }

    let mut log_sum = 0.0;
    for n in 1..=cfg.max_n {
        let (m, t) = if cfg.smoothing && n >= 2 {
            (matched[n - 1] + 1, total[n - 1] + 1)
        } else {
            (matched[n - 1], total[n - 1])
        };
        if m == 0 || t == 0 {
            return Ok(0.0);
        }
        log_sum += (m as f64 / t as f64).ln();
    }
    let bp = (1.0 - ref_len as f64 / cand_len as f64).min(0.0).exp();
    Ok((bp * (log_sum / cfg.max_n as f64).exp()).clamp(0.0, 1.0))
}
