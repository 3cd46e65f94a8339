use std::cmp::Ordering;
use std::ops::Range;

use crate::text;

/// Leftmost occurrence of `needle` starting at or after code point `cursor`.
pub fn locate_exact(haystack: &str, needle: &str, cursor: usize) -> Option<Range<usize>> {
    if needle.is_empty() {
        return None;
    }
    let from = text::byte_offset(haystack, cursor)?;
    let hit = haystack[from..].find(needle)? + from;
    Some(text::char_range_of_bytes(haystack, hit..hit + needle.len()))
}

/// Edit distance over code points with unit-cost insert, delete and substitute.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub(crate) fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// A window of the haystack chosen by fuzzy search.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyMatch {
    pub range: Range<usize>,
    /// Normalized edit distance, `distance / max(|window|, |needle|)`.
    pub score: f64,
    pub distance: usize,
}

/// Best word-aligned window of `haystack` for `needle`, returned only when
/// its normalized distance is at most `threshold`.
///
/// Candidate windows start and end on word boundaries (whitespace, or the
/// edge of leading/trailing punctuation on a word) and differ in length from
/// the needle by at most `ceil(threshold * |needle|)` code points. Ties go to
/// the lower score, then the leftmost, then the shortest window.
pub fn fuzzy_locate(haystack: &str, needle: &str, threshold: f64) -> Option<FuzzyMatch> {
    best_window(haystack, needle, threshold, 0).filter(|m| within(m, threshold))
}

pub(crate) fn within(m: &FuzzyMatch, threshold: f64) -> bool {
    m.score <= threshold
}

/// The best candidate window starting at or after `cursor`, regardless of
/// score. `None` when no window satisfies the length constraint.
pub(crate) fn best_window(
    haystack: &str,
    needle: &str,
    threshold: f64,
    cursor: usize,
) -> Option<FuzzyMatch> {
    let needle: Vec<char> = needle.chars().collect();
    if needle.is_empty() {
        return None;
    }
    let hay: Vec<char> = haystack.chars().collect();
    let slack = (threshold.max(0.0) * needle.len() as f64).ceil() as usize;
    let min_len = needle.len().saturating_sub(slack).max(1);
    let max_len = needle.len() + slack;

    let (starts, ends) = word_boundaries(haystack);
    // (distance, denominator, start, len)
    let mut best: Option<(usize, usize, usize, usize)> = None;
    for &s in starts.iter().filter(|&&s| s >= cursor) {
        for &e in &ends {
            if e <= s {
                continue;
            }
            let len = e - s;
            if len < min_len {
                continue;
            }
            if len > max_len {
                break;
            }
            let d = levenshtein_chars(&hay[s..e], &needle);
            let cand = (d, len.max(needle.len()), s, len);
            if best.is_none_or(|b| better(cand, b)) {
                best = Some(cand);
            }
        }
    }
    best.map(|(d, denom, s, len)| FuzzyMatch {
        range: s..s + len,
        score: d as f64 / denom as f64,
        distance: d,
    })
}

fn better(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> bool {
    // compare d_a/m_a with d_b/m_b exactly
    let by_score = (a.0 * b.1).cmp(&(b.0 * a.1));
    by_score.then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)) == Ordering::Less
}

/// Sorted, deduplicated window start and end positions.
fn word_boundaries(s: &str) -> (Vec<usize>, Vec<usize>) {
    let mut starts = Vec::new();
    let mut ends = Vec::new();
    for (range, tok) in text::whitespace_tokens(s) {
        let chars: Vec<char> = tok.chars().collect();
        let lead = chars.iter().take_while(|c| !c.is_alphanumeric()).count();
        let trail = chars.iter().rev().take_while(|c| !c.is_alphanumeric()).count();
        starts.push(range.start);
        ends.push(range.end);
        if lead < chars.len() {
            starts.push(range.start + lead);
            ends.push(range.end - trail);
        }
    }
    starts.sort_unstable();
    starts.dedup();
    ends.sort_unstable();
    ends.dedup();
    (starts, ends)
}
