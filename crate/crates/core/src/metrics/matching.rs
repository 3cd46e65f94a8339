use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::record::SentenceRecord;
use crate::span::CharSpan;

/// Verdict comparing a transferred span to its gold counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchClass {
    Exact,
    Wider,
    Narrower,
    Mismatch,
    Unhandled,
}

/// Interval comparison of `sys` against `gold`. Partial overlap without
/// containment and disjoint intervals are both `Mismatch`.
pub fn classify_match(gold: &CharSpan, sys: Option<&CharSpan>) -> MatchClass {
    classify_interval((gold.start, gold.end), sys.map(|s| (s.start, s.end)))
}

pub fn classify_interval(gold: (usize, usize), sys: Option<(usize, usize)>) -> MatchClass {
    let Some((s0, s1)) = sys else {
        return MatchClass::Unhandled;
    };
    let (g0, g1) = gold;
    if (s0, s1) == (g0, g1) {
        MatchClass::Exact
    } else if s0 <= g0 && s1 >= g1 {
        MatchClass::Wider
    } else if g0 <= s0 && g1 >= s1 {
        MatchClass::Narrower
    } else {
        MatchClass::Mismatch
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub exact: usize,
    pub wider: usize,
    pub narrower: usize,
    pub mismatched: usize,
    pub unhandled: usize,
    /// Sum of the four handled classes.
    pub spans_checked: usize,
}

impl MatchCounts {
    pub fn add(&mut self, class: MatchClass) {
        match class {
            MatchClass::Exact => self.exact += 1,
            MatchClass::Wider => self.wider += 1,
            MatchClass::Narrower => self.narrower += 1,
            MatchClass::Mismatch => self.mismatched += 1,
            MatchClass::Unhandled => self.unhandled += 1,
        }
        if class != MatchClass::Unhandled {
            self.spans_checked += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.spans_checked + self.unhandled
    }
}

/// Aggregate transfer quality over a gold set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// Gold records evaluated.
    pub total_entries: usize,
    #[serde(flatten)]
    pub counts: MatchCounts,
    pub per_label: BTreeMap<String, MatchCounts>,
    /// Gold records with no system counterpart; all their spans are unhandled.
    pub missing_records: Vec<String>,
    /// System records with no gold counterpart, ignored.
    pub unmatched_system_records: Vec<String>,
}

fn index_by_id<'a>(
    records: &'a [SentenceRecord],
    side: &str,
) -> Result<HashMap<&'a str, &'a SentenceRecord>, MetricsError> {
    let mut map = HashMap::with_capacity(records.len());
    for r in records {
        if map.insert(r.id.as_str(), r).is_some() {
            return Err(MetricsError::IdCollision {
                id: r.id.clone(),
                side: side.to_string(),
            });
        }
    }
    Ok(map)
}

/// Classifies every gold target span against the system span with the same
/// id in the system record with the same id. Gold spans come from the gold
/// records' `spans_rus`.
pub fn transfer_report(
    gold: &[SentenceRecord],
    sys: &[SentenceRecord],
) -> Result<TransferReport, MetricsError> {
    index_by_id(gold, "gold")?;
    let sys_by_id = index_by_id(sys, "system")?;
    let mut report = TransferReport {
        total_entries: gold.len(),
        ..TransferReport::default()
    };
    for g in gold {
        let gold_spans = g.spans_rus.as_deref().unwrap_or_default();
        let sys_record = sys_by_id.get(g.id.as_str());
        if sys_record.is_none() {
            report.missing_records.push(g.id.clone());
        }
        let sys_spans: HashMap<&str, &CharSpan> = sys_record
            .and_then(|s| s.spans_rus.as_deref())
            .unwrap_or_default()
            .iter()
            .map(|s| (s.span_id.as_str(), s))
            .collect();
        for gs in gold_spans {
            let class = classify_match(gs, sys_spans.get(gs.span_id.as_str()).copied());
            report.counts.add(class);
            report.per_label.entry(gs.label.clone()).or_default().add(class);
        }
    }
    let gold_ids: HashSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    report.unmatched_system_records = sys
        .iter()
        .filter(|s| !gold_ids.contains(s.id.as_str()))
        .map(|s| s.id.clone())
        .collect();
    Ok(report)
}

impl fmt::Display for TransferReport {
    /// Two-column table: the summary rows, then one block per label.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = |c: &MatchCounts| {
            [
                ("Exact Match", c.exact),
                ("Wider Match", c.wider),
                ("Narrower Match", c.narrower),
                ("Mismatched", c.mismatched),
                ("Spans Checked", c.spans_checked),
                ("Unhandled", c.unhandled),
            ]
        };
        writeln!(f, "{:<16} {:>8}", "Total Entries", self.total_entries)?;
        for (name, n) in rows(&self.counts) {
            writeln!(f, "{name:<16} {n:>8}")?;
        }
        for (label, c) in &self.per_label {
            writeln!(f)?;
            writeln!(f, "[{label}]")?;
            for (name, n) in rows(c) {
                writeln!(f, "{name:<16} {n:>8}")?;
            }
        }
        Ok(())
    }
}
