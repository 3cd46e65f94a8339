//! Line-delimited JSON record files and the checkpoint ledger used to resume
//! long batch runs.

mod jsonl;
mod ledger;

use std::path::Path;

pub use jsonl::{atomic_write, read_jsonl, read_jsonl_latest, write_jsonl, JsonlAppender};
pub use ledger::{pending, Failure, Ledger, LedgerEntry, Status, DEFAULT_MAX_ATTEMPTS};

#[derive(Debug, thiserror::Error)]
pub enum RecordsError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing required field `{field}`")]
    MissingField { line: usize, field: String },
    #[error("duplicate record id {id:?}{}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    DuplicateId { id: String, line: Option<usize> },
    #[error("ledger line {line}: {message}")]
    Ledger { line: usize, message: String },
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> RecordsError {
    RecordsError::Io {
        path: path.display().to_string(),
        source,
    }
}
