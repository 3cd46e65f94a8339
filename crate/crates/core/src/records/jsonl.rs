use std::collections::{HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{io_err, RecordsError};
use crate::record::SentenceRecord;

/// Writes `bytes` to a sibling temp file, syncs it, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), RecordsError> {
    let tmp = temp_path(path);
    let write = || -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| io_err(path, e))
}

pub(crate) fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Serializes records one per line and replaces `path` atomically.
/// Returns the number of records written.
pub fn write_jsonl(path: &Path, records: &[SentenceRecord]) -> Result<usize, RecordsError> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(RecordsError::DuplicateId {
                id: r.id.clone(),
                line: None,
            });
        }
    }
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).expect("records always serialize");
        buf.push(b'\n');
    }
    atomic_write(path, &buf)?;
    Ok(records.len())
}

/// Reads a record file. Unknown fields are kept; `id` and `text` are required
/// and ids must be unique.
pub fn read_jsonl(path: &Path) -> Result<Vec<SentenceRecord>, RecordsError> {
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(line, idx + 1)?;
        if !seen.insert(record.id.clone()) {
            return Err(RecordsError::DuplicateId {
                id: record.id,
                line: Some(idx + 1),
            });
        }
        out.push(record);
    }
    Ok(out)
}

/// Reads an append-only results file where later lines supersede earlier
/// ones with the same id. A final line without a newline that fails to parse
/// (a torn append) is ignored. A missing file reads as empty.
pub fn read_jsonl_latest(path: &Path) -> Result<HashMap<String, SentenceRecord>, RecordsError> {
    let content = match fs::read_to_string(path) {
        Ok(c) => c,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(e) => return Err(io_err(path, e)),
    };
    let complete = content.ends_with('\n');
    let lines: Vec<&str> = content.lines().collect();
    let mut out = HashMap::new();
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, idx + 1) {
            Ok(r) => {
                out.insert(r.id.clone(), r);
            }
            Err(_) if !complete && idx + 1 == lines.len() => break,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn parse_line(line: &str, line_no: usize) -> Result<SentenceRecord, RecordsError> {
    let value: Value = serde_json::from_str(line).map_err(|e| RecordsError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| RecordsError::Parse {
        line: line_no,
        message: "expected a JSON object".into(),
    })?;
    for field in ["id", "text"] {
        if !obj.contains_key(field) {
            return Err(RecordsError::MissingField {
                line: line_no,
                field: field.into(),
            });
        }
    }
    serde_json::from_value(value).map_err(|e| RecordsError::Parse {
        line: line_no,
        message: e.to_string(),
    })
}

/// Appends records to a JSONL file, flushing after every line.
pub struct JsonlAppender {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlAppender {
    pub fn open(path: &Path) -> Result<Self, RecordsError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn append<T: serde::Serialize>(&mut self, item: &T) -> Result<(), RecordsError> {
        let mut line = serde_json::to_vec(item).map_err(|e| RecordsError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        line.push(b'\n');
        self.out
            .write_all(&line)
            .and_then(|_| self.out.flush())
            .map_err(|e| io_err(&self.path, e))
    }
}
