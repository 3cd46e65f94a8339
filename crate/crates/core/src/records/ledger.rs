use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::jsonl::atomic_write;
use super::{io_err, RecordsError};
use crate::record::SentenceRecord;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub attempts: u32,
    pub last_error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Done,
    Failed,
    Exhausted,
}

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub id: String,
    pub status: Status,
    pub attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-record completion and failure state for resumable batch stages.
///
/// When backed by a file, every mutation rewrites the file through a temp
/// file and a rename, so a crash leaves either the old or the new state.
/// Loading folds lines in order (later lines win), so an appended log of
/// mutations is also a valid ledger file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ledger {
    path: Option<PathBuf>,
    max_attempts: u32,
    /// id -> failed attempts before success
    done: BTreeMap<String, u32>,
    failures: BTreeMap<String, Failure>,
}

impl Ledger {
    /// An in-memory ledger that is never persisted.
    pub fn in_memory(max_attempts: u32) -> Self {
        Self {
            path: None,
            max_attempts: max_attempts.max(1),
            done: BTreeMap::new(),
            failures: BTreeMap::new(),
        }
    }

    /// Loads `path` if it exists, otherwise starts empty. Nothing is written
    /// until the first mutation.
    pub fn open(path: &Path, max_attempts: u32) -> Result<Self, RecordsError> {
        let mut ledger = Self::in_memory(max_attempts);
        ledger.path = Some(path.to_path_buf());
        let content = match fs::read_to_string(path) {
            Ok(c) => c,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(ledger),
            Err(e) => return Err(io_err(path, e)),
        };
        for (idx, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: LedgerEntry =
                serde_json::from_str(line).map_err(|e| RecordsError::Ledger {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            ledger.apply(entry);
        }
        Ok(ledger)
    }

    fn apply(&mut self, e: LedgerEntry) {
        match e.status {
            Status::Done => {
                self.failures.remove(&e.id);
                self.done.insert(e.id, e.attempts);
            }
            Status::Failed | Status::Exhausted => {
                self.done.remove(&e.id);
                self.failures.insert(
                    e.id,
                    Failure {
                        attempts: e.attempts.min(self.max_attempts),
                        last_error: e.error.unwrap_or_default(),
                    },
                );
            }
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn max_attempts(&self) -> u32 {
        self.max_attempts
    }

    pub fn is_done(&self, id: &str) -> bool {
        self.done.contains_key(id)
    }

    pub fn is_exhausted(&self, id: &str) -> bool {
        self.failures
            .get(id)
            .is_some_and(|f| f.attempts >= self.max_attempts)
    }

    pub fn failure(&self, id: &str) -> Option<&Failure> {
        self.failures.get(id)
    }

    pub fn done_count(&self) -> usize {
        self.done.len()
    }

    pub fn exhausted_ids(&self) -> impl Iterator<Item = &str> {
        self.failures
            .iter()
            .filter(|(_, f)| f.attempts >= self.max_attempts)
            .map(|(id, _)| id.as_str())
    }

    pub fn failed_ids(&self) -> impl Iterator<Item = &str> {
        self.failures.keys().map(String::as_str)
    }

    /// Marks `id` complete. Returns false (and writes nothing) when it
    /// already was.
    pub fn mark_done(&mut self, id: &str) -> Result<bool, RecordsError> {
        if self.is_done(id) {
            return Ok(false);
        }
        let prior = self.failures.get(id).map_or(0, |f| f.attempts);
        self.mutate(LedgerEntry {
            id: id.to_string(),
            status: Status::Done,
            attempts: prior,
            error: None,
        })?;
        Ok(true)
    }

    /// Records one more failed attempt for `id` and returns the attempt count.
    /// Attempts saturate at the maximum; completed ids are left alone.
    pub fn mark_failed(&mut self, id: &str, error: &str) -> Result<u32, RecordsError> {
        if self.is_done(id) {
            return Ok(0);
        }
        let attempts = (self.failures.get(id).map_or(0, |f| f.attempts) + 1).min(self.max_attempts);
        let status = if attempts >= self.max_attempts {
            Status::Exhausted
        } else {
            Status::Failed
        };
        self.mutate(LedgerEntry {
            id: id.to_string(),
            status,
            attempts,
            error: Some(error.to_string()),
        })?;
        Ok(attempts)
    }

    fn mutate(&mut self, entry: LedgerEntry) -> Result<(), RecordsError> {
        let before = self.clone();
        self.apply(entry);
        if let Err(e) = self.persist() {
            *self = before;
            return Err(e);
        }
        Ok(())
    }

    /// Snapshot lines, done entries first, each group sorted by id.
    pub fn entries(&self) -> Vec<LedgerEntry> {
        let done = self.done.iter().map(|(id, attempts)| LedgerEntry {
            id: id.clone(),
            status: Status::Done,
            attempts: *attempts,
            error: None,
        });
        let failed = self.failures.iter().map(|(id, f)| LedgerEntry {
            id: id.clone(),
            status: if f.attempts >= self.max_attempts {
                Status::Exhausted
            } else {
                Status::Failed
            },
            attempts: f.attempts,
            error: Some(f.last_error.clone()),
        });
        done.chain(failed).collect()
    }

    fn persist(&self) -> Result<(), RecordsError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let mut buf = Vec::new();
        for e in self.entries() {
            serde_json::to_writer(&mut buf, &e).expect("ledger entries serialize");
            buf.push(b'\n');
        }
        atomic_write(path, &buf)
    }
}

/// Records that are neither done nor failure-exhausted, in input order.
pub fn pending<'a>(records: &'a [SentenceRecord], ledger: &Ledger) -> Vec<&'a SentenceRecord> {
    records
        .iter()
        .filter(|r| !ledger.is_done(&r.id) && !ledger.is_exhausted(&r.id))
        .collect()
}
