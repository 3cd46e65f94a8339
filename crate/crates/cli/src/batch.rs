//! Resumable batch execution over a record file.
//!
//! Each finished record is appended to `<out>.partial.jsonl` and then marked
//! done in `<out>.ledger.jsonl`. A rerun skips done and exhausted records,
//! so an interrupted run loses at most the records in flight. The output
//! file is rewritten atomically from the input plus the partial file at the
//! end of every run.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use annobridge::llm::GatewayError;
use annobridge::records::{pending, read_jsonl_latest, write_jsonl, JsonlAppender, Ledger};
use annobridge::SentenceRecord;
use serde::Serialize;

use crate::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPaths {
    pub out: PathBuf,
    pub partial: PathBuf,
    pub ledger: PathBuf,
}

impl BatchPaths {
    /// Partial and ledger files next to `out`.
    pub fn beside(out: &Path) -> Self {
        let with = |suffix: &str| {
            let mut name = out.file_name().unwrap_or_default().to_os_string();
            name.push(suffix);
            out.with_file_name(name)
        };
        Self {
            out: out.to_path_buf(),
            partial: with(".partial.jsonl"),
            ledger: with(".ledger.jsonl"),
        }
    }

    pub fn with_ledger(mut self, ledger: Option<PathBuf>) -> Self {
        if let Some(l) = ledger {
            self.ledger = l;
        }
        self
    }

    fn check_distinct(&self, input: &Path) -> Result<(), PipelineError> {
        let all = [input, &self.out, &self.partial, &self.ledger];
        for (i, a) in all.iter().enumerate() {
            if all[i + 1..].contains(a) {
                return Err(PipelineError::Config(format!(
                    "path {} is used for two different files",
                    a.display()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub workers: usize,
    /// Process at most this many pending records, then stop as if interrupted.
    pub limit: Option<usize>,
    pub ledger_max_attempts: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BatchSummary {
    pub total: usize,
    pub skipped_done: usize,
    pub skipped_exhausted: usize,
    pub processed: usize,
    pub succeeded: usize,
    /// `(id, error)` for records that failed in this run.
    pub failed: Vec<(String, String)>,
    /// Records that have now used up their retry budget across runs.
    pub exhausted: usize,
    /// Records neither done nor exhausted after this run.
    pub still_pending: usize,
    /// Chat requests spent in this run.
    pub requests: u64,
    pub aborted: Option<String>,
}

impl BatchSummary {
    /// 0 when every processed record succeeded, 2 on any failure.
    pub fn exit_code(&self) -> u8 {
        if self.failed.is_empty() && self.exhausted == 0 && self.aborted.is_none() {
            0
        } else {
            2
        }
    }
}

/// What a unit of work reports besides its result.
pub struct WorkDone {
    pub record: SentenceRecord,
    pub requests: u32,
}

pub struct WorkFailed {
    pub error: GatewayError,
    pub requests: u32,
}

/// Runs `work` over every pending record with a pool of `opts.workers`
/// threads and merges the results into `paths.out`.
pub fn run_batch<F>(
    input: &Path,
    records: &[SentenceRecord],
    paths: &BatchPaths,
    opts: &BatchOptions,
    work: F,
) -> Result<BatchSummary, PipelineError>
where
    F: Fn(&SentenceRecord) -> Result<WorkDone, WorkFailed> + Sync,
{
    paths.check_distinct(input)?;
    let ledger = Ledger::open(&paths.ledger, opts.ledger_max_attempts).map_err(|e| PipelineError::records(&paths.ledger, e))?;
    let mut todo = pending(records, &ledger);
    let mut summary = BatchSummary {
        total: records.len(),
        skipped_done: records.iter().filter(|r| ledger.is_done(&r.id)).count(),
        skipped_exhausted: records.iter().filter(|r| ledger.is_exhausted(&r.id)).count(),
        ..BatchSummary::default()
    };
    if let Some(limit) = opts.limit {
        todo.truncate(limit);
    }

    let appender = JsonlAppender::open(&paths.partial).map_err(|e| PipelineError::records(&paths.partial, e))?;
    let shared = Mutex::new((ledger, appender, summary.clone(), None::<PipelineError>));
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);

    thread::scope(|scope| {
        for _ in 0..opts.workers.max(1).min(todo.len().max(1)) {
            scope.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(record) = todo.get(i) else { break };
                let result = work(record);

                let mut guard = shared.lock().expect("batch state lock");
                let (ledger, appender, sum, fatal) = &mut *guard;
                sum.processed += 1;
                let step = match result {
                    Ok(done) => {
                        sum.requests += u64::from(done.requests);
                        sum.succeeded += 1;
                        appender
                            .append(&done.record)
                            .map_err(|e| PipelineError::records(&paths.partial, e))
                            .and_then(|_| {
                                ledger
                                    .mark_done(&record.id)
                                    .map_err(|e| PipelineError::records(&paths.ledger, e))
                            })
                            .map(|_| ())
                    }
                    Err(failed) => {
                        sum.requests += u64::from(failed.requests);
                        let msg = failed.error.to_string();
                        if let GatewayError::Auth(_) = failed.error {
                            sum.aborted = Some(msg.clone());
                            stop.store(true, Ordering::SeqCst);
                        }
                        sum.failed.push((record.id.clone(), msg.clone()));
                        ledger
                            .mark_failed(&record.id, &msg)
                            .map_err(|e| PipelineError::records(&paths.ledger, e))
                            .map(|_| ())
                    }
                };
                if let Err(e) = step {
                    *fatal = Some(e);
                    stop.store(true, Ordering::SeqCst);
                }
            });
        }
    });

    let (ledger, _, run, fatal) = shared.into_inner().expect("batch state lock");
    if let Some(e) = fatal {
        return Err(e);
    }
    summary = run;
    summary.failed.sort();
    summary.exhausted = records.iter().filter(|r| ledger.is_exhausted(&r.id)).count();
    summary.still_pending = pending(records, &ledger).len();

    let latest = read_jsonl_latest(&paths.partial).map_err(|e| PipelineError::records(&paths.partial, e))?;
    let merged: Vec<SentenceRecord> = records
        .iter()
        .map(|r| match latest.get(&r.id) {
            Some(updated) if ledger.is_done(&r.id) => updated.clone(),
            _ => r.clone(),
        })
        .collect();
    write_jsonl(&paths.out, &merged).map_err(|e| PipelineError::records(&paths.out, e))?;
    Ok(summary)
}
