//! Code-point addressed text helpers.
//!
//! Every offset in this crate is a Unicode scalar index, end-exclusive.
//! Byte offsets never leave this module.

use std::ops::Range;

/// Number of code points in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte offset of the code point at `index`, or `s.len()` when `index`
/// equals the code-point length. `None` past the end.
pub fn byte_offset(s: &str, index: usize) -> Option<usize> {
    if index == 0 {
        return Some(0);
    }
    let mut seen = 0;
    for (byte, _) in s.char_indices() {
        if seen == index {
            return Some(byte);
        }
        seen += 1;
    }
    (seen == index).then_some(s.len())
}

/// The code-point slice `[start, end)` of `s`.
pub fn slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let from = byte_offset(s, start)?;
    let to = from + byte_offset(&s[from..], end - start)?;
    Some(&s[from..to])
}

/// Code-point interval of a byte range that lies on char boundaries.
pub(crate) fn char_range_of_bytes(s: &str, bytes: Range<usize>) -> Range<usize> {
    let start = s[..bytes.start].chars().count();
    let len = s[bytes.start..bytes.end].chars().count();
    start..start + len
}

/// Whitespace-delimited tokens of `s` with their code-point intervals.
pub fn whitespace_tokens(s: &str) -> Vec<(Range<usize>, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let mut cp = 0;
    for (byte, ch) in s.char_indices() {
        if ch.is_whitespace() {
            if let Some((cs, bs)) = start.take() {
                out.push((cs..cp, &s[bs..byte]));
            }
        } else if start.is_none() {
            start = Some((cp, byte));
        }
        cp += 1;
    }
    if let Some((cs, bs)) = start {
        out.push((cs..cp, &s[bs..]));
    }
    out
}
