use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::record::{SentenceRecord, Side};

/// Records sharing the same text after trimming outer whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicateGroup {
    pub text: String,
    /// Member ids, sorted.
    pub ids: Vec<String>,
    /// False when members carry different source annotations.
    pub annotations_agree: bool,
}

impl DuplicateGroup {
    /// Copies beyond the first.
    pub fn redundant(&self) -> usize {
        self.ids.len() - 1
    }
}

/// Groups byte-identical texts (outer whitespace trimmed, no case folding).
///
/// Groups are sorted by text and member ids are sorted, so the result does
/// not depend on input order.
pub fn detect_duplicates(ds: &[SentenceRecord]) -> Vec<DuplicateGroup> {
    let mut by_text: HashMap<&str, Vec<&SentenceRecord>> = HashMap::new();
    for r in ds {
        by_text.entry(r.text.trim()).or_default().push(r);
    }
    let mut groups: Vec<DuplicateGroup> = by_text
        .into_iter()
        .filter(|(_, members)| members.len() >= 2)
        .map(|(text, members)| {
            let first = annotation_key(members[0]);
            let annotations_agree = members[1..].iter().all(|m| annotation_key(m) == first);
            let mut ids: Vec<String> = members.iter().map(|m| m.id.clone()).collect();
            ids.sort();
            DuplicateGroup {
                text: text.to_string(),
                ids,
                annotations_agree,
            }
        })
        .collect();
    groups.sort_by(|a, b| a.text.cmp(&b.text).then_with(|| a.ids.cmp(&b.ids)));
    groups
}

/// Total number of redundant copies, Σ(group size − 1).
pub fn duplicate_count(groups: &[DuplicateGroup]) -> usize {
    groups.iter().map(DuplicateGroup::redundant).sum()
}

/// Spans as (start, end, label) relative to the trimmed text, sorted.
fn annotation_key(r: &SentenceRecord) -> Vec<(usize, usize, &str)> {
    let shift = r.text.chars().take_while(|c| c.is_whitespace()).count();
    let mut key: Vec<_> = r
        .spans
        .iter()
        .map(|s| {
            (
                s.start.saturating_sub(shift),
                s.end.saturating_sub(shift),
                s.label.as_str(),
            )
        })
        .collect();
    key.sort_unstable();
    key
}

/// Label histogram over one side of a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LabelStats {
    pub counts: BTreeMap<String, usize>,
    pub total_sentences: usize,
    pub total_spans: usize,
}

impl LabelStats {
    pub fn get(&self, label: &str) -> usize {
        self.counts.get(label).copied().unwrap_or(0)
    }

    /// Labels by descending count, then name.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<_> = self.counts.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

impl fmt::Display for LabelStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ranked = self.ranked();
        let width = ranked
            .iter()
            .map(|(l, _)| l.len())
            .chain(["Entity name".len(), "Total spans".len()])
            .max()
            .unwrap_or(0);
        writeln!(f, "{:<width$}  {:>7}", "Entity name", "Count")?;
        for (label, n) in ranked {
            writeln!(f, "{label:<width$}  {n:>7}")?;
        }
        writeln!(f, "{:<width$}  {:>7}", "Total spans", self.total_spans)?;
        write!(f, "{:<width$}  {:>7}", "Sentences", self.total_sentences)
    }
}

/// Exact label histogram over the spans of `side`. Records without that side
/// count as sentences with no spans.
pub fn entity_stats(ds: &[SentenceRecord], side: Side) -> LabelStats {
    let mut stats = LabelStats {
        total_sentences: ds.len(),
        ..LabelStats::default()
    };
    for span in ds.iter().flat_map(|r| r.side_spans(side).unwrap_or_default()) {
        *stats.counts.entry(span.label.clone()).or_insert(0) += 1;
        stats.total_spans += 1;
    }
    stats
}
