use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::CorpusError;

/// One token line of a CoNLL-like file.
///
/// Columns are `token, source, start, end, tag`, then any number of opaque
/// trailing columns (relation annotation) that are carried through untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenRow {
    pub token: String,
    pub source_file: String,
    pub start_char: usize,
    pub end_char: usize,
    pub tag: String,
    pub extra_cols: Vec<String>,
}

/// A blank-line delimited block of token rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConllSentence {
    pub sentence_id: String,
    pub rows: Vec<TokenRow>,
}

impl ConllSentence {
    pub fn tags(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.tag.as_str())
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().map(|r| r.token.as_str())
    }
}

pub const MIN_COLUMNS: usize = 5;

/// Reads a CoNLL-like file. Sentence ids are `<file name>:<ordinal>`, 1-based.
pub fn parse_conll(path: &Path) -> Result<Vec<ConllSentence>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse_conll_str(&content, &name)
}

/// Parses CoNLL-like content already in memory. `name` prefixes sentence ids
/// and appears in error messages.
pub fn parse_conll_str(content: &str, name: &str) -> Result<Vec<ConllSentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut rows: Vec<TokenRow> = Vec::new();

    let flush = |rows: &mut Vec<TokenRow>, sentences: &mut Vec<ConllSentence>| {
        if !rows.is_empty() {
            sentences.push(ConllSentence {
                sentence_id: format!("{name}:{}", sentences.len() + 1),
                rows: std::mem::take(rows),
            });
        }
    };

    for (idx, raw) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            flush(&mut rows, &mut sentences);
            continue;
        }
        let row = parse_row(line).map_err(|message| CorpusError::Format {
            path: name.to_string(),
            line: line_no,
            message,
        })?;
        if let Some(prev) = rows.last() {
            if row.start_char < prev.start_char {
                return Err(CorpusError::Format {
                    path: name.to_string(),
                    line: line_no,
                    message: format!(
                        "start offset {} precedes previous token start {}",
                        row.start_char, prev.start_char
                    ),
                });
            }
        }
        rows.push(row);
    }
    flush(&mut rows, &mut sentences);
    Ok(sentences)
}

fn parse_row(line: &str) -> Result<TokenRow, String> {
    let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
    if cols.len() < MIN_COLUMNS {
        return Err(format!(
            "expected at least {MIN_COLUMNS} tab-separated columns, found {}",
            cols.len()
        ));
    }
    let offset = |i: usize, what: &str| {
        cols[i]
            .parse::<usize>()
            .map_err(|_| format!("{what} offset {:?} is not a non-negative integer", cols[i]))
    };
    let start_char = offset(2, "start")?;
    let end_char = offset(3, "end")?;
    if start_char >= end_char {
        return Err(format!("empty token interval [{start_char}, {end_char})"));
    }
    Ok(TokenRow {
        token: cols[0].to_string(),
        source_file: cols[1].to_string(),
        start_char,
        end_char,
        tag: cols[4].to_string(),
        extra_cols: cols[MIN_COLUMNS..].iter().map(|s| s.to_string()).collect(),
    })
}

/// Serializes sentences back to the tab-separated layout, one blank line
/// after each sentence.
pub fn to_conll_string(sentences: &[ConllSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for r in &s.rows {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.token, r.source_file, r.start_char, r.end_char, r.tag
            );
            for c in &r.extra_cols {
                out.push('\t');
                out.push_str(c);
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn write_conll(path: &Path, sentences: &[ConllSentence]) -> Result<(), CorpusError> {
    fs::write(path, to_conll_string(sentences)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "Cells\t ./dev/bio.txt\t 0\t 5\t B-Term\t T1\t T2\t Direct-Defines\n\
                       divide\t ./dev/bio.txt\t 6\t 12\t O\t -1\t -1\t 0\n\
                       \n\
                       Atoms\t ./dev/bio.txt\t 13\t 18\t O\t -1\t -1\t 0\n";

    #[test]
    fn blank_lines_delimit_sentences() {
        let s = parse_conll_str(TWO, "dev.deft").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].sentence_id, "dev.deft:1");
        assert_eq!(s[0].rows[0].token, "Cells");
        assert_eq!(s[0].rows[0].source_file, "./dev/bio.txt");
        assert_eq!(s[0].rows[0].extra_cols, vec!["T1", "T2", "Direct-Defines"]);
        assert_eq!(s[1].rows.len(), 1);
    }

    #[test]
    fn empty_input_gives_no_sentences() {
        assert!(parse_conll_str("", "x").unwrap().is_empty());
        assert!(parse_conll_str("\n\n  \n", "x").unwrap().is_empty());
    }

    #[test]
    fn short_rows_report_line_number() {
        let err = parse_conll_str("a\tf\t0\t1\tO\nb\tf\t2\n", "x").unwrap_err();
        match err {
            CorpusError::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_offsets_rejected() {
        let err = parse_conll_str("\n\na\tf\tzero\t1\tO\n", "x").unwrap_err();
        assert!(matches!(err, CorpusError::Format { line: 3, .. }));
        let err = parse_conll_str("a\tf\t-1\t1\tO\n", "x").unwrap_err();
        assert!(matches!(err, CorpusError::Format { line: 1, .. }));
    }

    #[test]
    fn reversed_offsets_rejected() {
        assert!(parse_conll_str("a\tf\t4\t4\tO\n", "x").is_err());
        assert!(parse_conll_str("a\tf\t4\t6\tO\nb\tf\t1\t2\tO\n", "x").is_err());
    }

    #[test]
    fn crlf_and_missing_final_newline() {
        let s = parse_conll_str("a\tf\t0\t1\tO\r\n\r\nb\tf\t2\t3\tB-Term", "x").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].rows[0].tag, "B-Term");
    }

    #[test]
    fn serialization_reparses() {
        let s = parse_conll_str(TWO, "dev.deft").unwrap();
        let again = parse_conll_str(&to_conll_string(&s), "dev.deft").unwrap();
        assert_eq!(s, again);
    }
}
