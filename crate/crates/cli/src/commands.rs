use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use annobridge::corpus::{
    conll_to_record, detect_duplicates, duplicate_count, entity_stats, parse_conll, record_to_bio,
    repair_bio, validate_bio, write_conll, ConllSentence, DuplicateGroup, LabelStats,
    SOURCE_FILE_KEY,
};
use annobridge::llm::{
    ChatBackend, GatewayError, HttpChatBackend, MockBehavior, MockLlm,
    TranscriptBackend,
};
use annobridge::metrics::{
    pair_translations, transfer_report, translation_scores, EmbeddingBackend,
    HttpEmbeddingBackend, MockEmbedder, TransferReport, TranslationScores,
};
use annobridge::records::{atomic_write, read_jsonl, write_jsonl, JsonlAppender};
use annobridge::transfer::{
    transfer_record, translate_record, DiagnosticEntry, Resolution, UnresolvedSpan,
    DIAGNOSTICS_KEY,
};
use annobridge::{SentenceRecord, Side};
use serde::Serialize;

use crate::batch::{run_batch, BatchOptions, BatchPaths, BatchSummary, WorkDone, WorkFailed};
use crate::{PipelineConfig, PipelineError};

fn say(out: &mut dyn Write, line: impl AsRef<str>) {
    // a closed stdout must not fail the pipeline
    let _ = writeln!(out, "{}", line.as_ref());
}

pub fn load_records(path: &Path) -> Result<Vec<SentenceRecord>, PipelineError> {
    read_jsonl(path).map_err(|e| PipelineError::records(path, e))
}

fn write_json_report<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    atomic_write(path, text.as_bytes()).map_err(|e| PipelineError::records(path, e))
}

fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvertSummary {
    pub files: usize,
    pub sentences: usize,
    pub records: usize,
    pub sentences_with_violations: usize,
    pub violations: usize,
    pub repaired: usize,
    pub skipped: Vec<String>,
    pub stats: LabelStats,
}

/// Parses every file in `corpus_dir` and converts the sentences to records.
/// BIO violations are reported; with `repair` they are fixed, otherwise the
/// offending sentences are left out. Any parse error aborts before output.
pub fn convert(
    corpus_dir: &Path,
    out_path: &Path,
    repair: bool,
    out: &mut dyn Write,
) -> Result<ConvertSummary, PipelineError> {
    let files = corpus_files(corpus_dir)?;
    let mut parsed: Vec<ConllSentence> = Vec::new();
    let mut errors = Vec::new();
    for file in &files {
        match parse_conll(file) {
            Ok(s) => parsed.extend(s),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        return Err(PipelineError::Input(format!(
            "{} file(s) failed to parse:\n  {}",
            errors.len(),
            errors.join("\n  ")
        )));
    }

    let mut summary = ConvertSummary {
        files: files.len(),
        sentences: parsed.len(),
        ..ConvertSummary::default()
    };
    let mut records = Vec::with_capacity(parsed.len());
    for s in parsed {
        let violations = validate_bio(&s);
        let s = if violations.is_empty() {
            s
        } else {
            summary.sentences_with_violations += 1;
            summary.violations += violations.len();
            for v in &violations {
                say(out, format!("warning: {}: row {}: {:?}", v.sentence_id, v.row_index, v.kind));
            }
            if !repair {
                say(out, format!("warning: {} skipped (rerun with --repair-bio to keep it)", s.sentence_id));
                summary.skipped.push(s.sentence_id.clone());
                continue;
            }
            say(out, format!("warning: {} repaired", s.sentence_id));
            summary.repaired += 1;
            repair_bio(&s)
        };
        records.push(conll_to_record(&s)?);
    }
    summary.records = write_jsonl(out_path, &records).map_err(|e| PipelineError::records(out_path, e))?;
    summary.stats = entity_stats(&records, Side::Source);
    say(
        out,
        format!(
            "{} file(s), {} sentence(s), {} record(s) written to {}",
            summary.files,
            summary.sentences,
            summary.records,
            out_path.display()
        ),
    );
    if summary.violations > 0 {
        say(
            out,
            format!(
                "{} BIO violation(s) in {} sentence(s); {} repaired, {} skipped",
                summary.violations,
                summary.sentences_with_violations,
                summary.repaired,
                summary.skipped.len()
            ),
        );
    }
    say(out, summary.stats.to_string());
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub records: usize,
    pub duplicates: usize,
    pub annotation_conflicts: usize,
    pub groups: Vec<DuplicateGroup>,
    /// Only known when auditing a corpus directory.
    pub bio_violations: Option<usize>,
    pub source_stats: LabelStats,
    pub target_stats: Option<LabelStats>,
}

/// Audits a record file, or a corpus directory converted in memory (with
/// BIO repair, nothing is written).
pub fn audit(input: &Path, out: &mut dyn Write) -> Result<AuditReport, PipelineError> {
    let (records, bio_violations) = if input.is_dir() {
        let mut records = Vec::new();
        let mut violations = 0;
        for file in corpus_files(input)? {
            for s in parse_conll(&file)? {
                let v = validate_bio(&s).len();
                violations += v;
                records.push(conll_to_record(&if v > 0 { repair_bio(&s) } else { s })?);
            }
        }
        (records, Some(violations))
    } else {
        (load_records(input)?, None)
    };

    let groups = detect_duplicates(&records);
    let report = AuditReport {
        records: records.len(),
        duplicates: duplicate_count(&groups),
        annotation_conflicts: groups.iter().filter(|g| !g.annotations_agree).count(),
        bio_violations,
        source_stats: entity_stats(&records, Side::Source),
        target_stats: records
            .iter()
            .any(|r| r.spans_rus.is_some())
            .then(|| entity_stats(&records, Side::Target)),
        groups,
    };

    say(out, format!("{} record(s)", report.records));
    say(
        out,
        format!("{} duplicates in {} group(s)", report.duplicates, report.groups.len()),
    );
    for g in &report.groups {
        let flag = if g.annotations_agree { "" } else { "  [annotation conflict]" };
        say(out, format!("  {} x{}: {}{flag}", g.ids.join(", "), g.ids.len(), g.text));
    }
    match report.bio_violations {
        Some(n) => say(out, format!("{n} BIO violation(s)")),
        None => say(out, "BIO violations: not applicable to record files"),
    }
    say(out, "Source entities:");
    say(out, report.source_stats.to_string());
    if let Some(t) = &report.target_stats {
        say(out, "Target entities:");
        say(out, t.to_string());
    }
    Ok(report)
}

/// Chat backend for translate and transfer: the offline mock when `mock`
/// is set (echoing gold answers when a gold file is given), otherwise the
/// configured endpoint.
pub fn chat_backend(
    cfg: &PipelineConfig,
    mock: bool,
    mock_gold: Option<&Path>,
) -> Result<Box<dyn ChatBackend>, PipelineError> {
    let backend: Box<dyn ChatBackend> = if mock || mock_gold.is_some() {
        match mock_gold {
            Some(path) => Box::new(MockLlm::echo_gold(&load_records(path)?)),
            None => Box::new(MockLlm::uniform(MockBehavior::Echo)),
        }
    } else {
        let endpoint = cfg
            .chat
            .clone()
            .ok_or_else(|| PipelineError::Config("no [chat] endpoint configured (or pass --mock)".into()))?;
        Box::new(HttpChatBackend::new(endpoint.with_env_key()).map_err(GatewayError::Backend)?)
    };
    match &cfg.transcript {
        Some(path) => {
            let log = JsonlAppender::open(path).map_err(|e| PipelineError::records(path, e))?;
            Ok(Box::new(TranscriptBackend::new(backend, log)))
        }
        None => Ok(backend),
    }
}

pub fn embedding_backend(cfg: &PipelineConfig, mock: bool) -> Result<Option<Box<dyn EmbeddingBackend>>, PipelineError> {
    if mock {
        return Ok(Some(Box::new(MockEmbedder::default())));
    }
    match &cfg.embedding {
        Some(endpoint) => Ok(Some(Box::new(
            HttpEmbeddingBackend::new(endpoint.clone().with_env_key()).map_err(GatewayError::Backend)?,
        ))),
        None => Ok(None),
    }
}

/// Options shared by the two batch stages.
#[derive(Debug, Clone, Default)]
pub struct StageOptions {
    pub mock: bool,
    pub limit: Option<usize>,
    pub ledger: Option<PathBuf>,
}

fn failed(error: GatewayError) -> WorkFailed {
    let requests = match &error {
        GatewayError::Exhausted { attempts, .. } => *attempts,
        GatewayError::MissingField(_) | GatewayError::Config(_) => 0,
        _ => 1,
    };
    WorkFailed { error, requests }
}

fn report_batch(out: &mut dyn Write, stage: &str, s: &BatchSummary) {
    say(
        out,
        format!(
            "{stage}: {} record(s), {} already done, {} processed ({} ok, {} failed), {} request(s)",
            s.total,
            s.skipped_done,
            s.processed,
            s.succeeded,
            s.failed.len(),
            s.requests
        ),
    );
    for (id, err) in &s.failed {
        say(out, format!("  failed {id}: {err}"));
    }
    if s.exhausted > 0 {
        say(out, format!("{} record(s) exhausted their retries", s.exhausted));
    }
    if s.still_pending > 0 {
        say(out, format!("{} record(s) still pending; rerun to resume", s.still_pending));
    }
    if let Some(why) = &s.aborted {
        say(out, format!("aborted: {why}"));
    }
}

/// Fills `text_rus` for every pending record.
pub fn translate(
    input: &Path,
    out_path: &Path,
    cfg: &PipelineConfig,
    backend: &dyn ChatBackend,
    opts: &StageOptions,
    out: &mut dyn Write,
) -> Result<BatchSummary, PipelineError> {
    cfg.validate()?;
    let records = load_records(input)?;
    let template = cfg.translate_template()?;
    let settings = cfg.chat_settings(opts.mock);
    let paths = BatchPaths::beside(out_path).with_ledger(opts.ledger.clone());
    let batch = BatchOptions {
        workers: cfg.workers,
        limit: opts.limit,
        ledger_max_attempts: cfg.ledger_max_attempts,
    };
    let summary = run_batch(input, &records, &paths, &batch, |r| {
        translate_record(r, backend, &template, &settings)
            .map(|(record, requests)| WorkDone { record, requests })
            .map_err(failed)
    })?;
    report_batch(out, "translate", &summary);
    Ok(summary)
}

/// Path of the unresolved-span sidecar written by [`transfer`].
pub fn diagnostics_path(out_path: &Path) -> PathBuf {
    let mut name = out_path.file_name().unwrap_or_default().to_os_string();
    name.push(".diagnostics.jsonl");
    out_path.with_file_name(name)
}

/// Projects spans onto the translations of every pending record and writes
/// the unresolved-span sidecar. All records must already be translated.
pub fn transfer(
    input: &Path,
    out_path: &Path,
    cfg: &PipelineConfig,
    backend: &dyn ChatBackend,
    opts: &StageOptions,
    out: &mut dyn Write,
) -> Result<BatchSummary, PipelineError> {
    cfg.validate()?;
    let records = load_records(input)?;
    let untranslated: Vec<&str> = records
        .iter()
        .filter(|r| r.text_rus.is_none())
        .map(|r| r.id.as_str())
        .collect();
    if !untranslated.is_empty() {
        let shown: Vec<&str> = untranslated.iter().take(5).copied().collect();
        return Err(PipelineError::Input(format!(
            "{} record(s) lack text_rus (run translate first): {}{}",
            untranslated.len(),
            shown.join(", "),
            if untranslated.len() > shown.len() { ", ..." } else { "" }
        )));
    }

    let templates = cfg.templates()?;
    let settings = cfg.chat_settings(opts.mock);
    let paths = BatchPaths::beside(out_path).with_ledger(opts.ledger.clone());
    let batch = BatchOptions {
        workers: cfg.workers,
        limit: opts.limit,
        ledger_max_attempts: cfg.ledger_max_attempts,
    };
    let summary = run_batch(input, &records, &paths, &batch, |r| {
        transfer_record(r, backend, &templates, &cfg.transfer, &settings)
            .map(|o| WorkDone { record: o.record, requests: o.attempts + o.translate_attempts })
            .map_err(failed)
    })?;
    report_batch(out, "transfer", &summary);

    let sidecar = diagnostics_path(out_path);
    let unresolved = write_diagnostics(&load_records(out_path)?, &sidecar)?;
    say(out, format!("{unresolved} unresolved span(s); details in {}", sidecar.display()));
    Ok(summary)
}

/// Regenerates the sidecar from the diagnostics stored in the records.
fn write_diagnostics(records: &[SentenceRecord], path: &Path) -> Result<usize, PipelineError> {
    let mut lines = String::new();
    let mut n = 0;
    for r in records {
        let Some(diag) = r.extra.get(DIAGNOSTICS_KEY) else { continue };
        let unresolved: Vec<UnresolvedSpan> = diag
            .get("unresolved")
            .cloned()
            .and_then(|v| serde_json::from_value(v).ok())
            .unwrap_or_default();
        let res = Resolution { resolved: Vec::new(), unresolved };
        for entry in DiagnosticEntry::from_resolution(&r.id, &res) {
            lines.push_str(&serde_json::to_string(&entry).expect("diagnostics serialize"));
            lines.push('\n');
            n += 1;
        }
    }
    atomic_write(path, lines.as_bytes()).map_err(|e| PipelineError::records(path, e))?;
    Ok(n)
}

pub fn eval_transfer(
    gold_path: &Path,
    sys_path: &Path,
    json_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<TransferReport, PipelineError> {
    let gold = load_records(gold_path)?;
    let sys = load_records(sys_path)?;
    let report = transfer_report(&gold, &sys)?;
    if !report.missing_records.is_empty() {
        say(
            out,
            format!(
                "warning: {} of {} gold record(s) have no system counterpart; their spans count as unhandled",
                report.missing_records.len(),
                report.total_entries
            ),
        );
    }
    if !report.unmatched_system_records.is_empty() {
        say(
            out,
            format!(
                "warning: {} system record(s) have no gold counterpart and were ignored",
                report.unmatched_system_records.len()
            ),
        );
    }
    say(out, report.to_string());
    if let Some(path) = json_out {
        write_json_report(path, &report)?;
    }
    Ok(report)
}

pub fn eval_translation(
    gold_path: &Path,
    sys_path: &Path,
    cfg: &PipelineConfig,
    embedder: Option<&dyn EmbeddingBackend>,
    json_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<TranslationScores, PipelineError> {
    let gold = load_records(gold_path)?;
    let sys = load_records(sys_path)?;
    let triples = pair_translations(&gold, &sys)?;
    if embedder.is_none() {
        say(out, "notice: no embedding endpoint; BLEU-like and parallel comparison skipped");
    }
    let scores = translation_scores(
        &triples,
        &cfg.bleu,
        embedder.map(|e| (e, cfg.embedding_batch_size)),
        cfg.distance,
    )?;
    say(out, scores.to_string());
    if let Some(path) = json_out {
        write_json_report(path, &scores)?;
    }
    Ok(scores)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExportSummary {
    pub files: Vec<PathBuf>,
    pub sentences: usize,
    /// `(record id, reason)` for records left out.
    pub skipped: Vec<(String, String)>,
}

fn export_file_name(r: &SentenceRecord) -> String {
    r.extra
        .get(SOURCE_FILE_KEY)
        .and_then(|v| v.as_str())
        .and_then(|s| Path::new(s).file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "records.conll".to_string())
}

/// Writes the target side of every record as CoNLL, one file per source
/// file. Records with overlapping or missing target spans are skipped.
pub fn export(records_path: &Path, out_dir: &Path, out: &mut dyn Write) -> Result<ExportSummary, PipelineError> {
    let records = load_records(records_path)?;
    fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let mut by_file: BTreeMap<String, Vec<ConllSentence>> = BTreeMap::new();
    let mut summary = ExportSummary::default();
    for r in &records {
        match record_to_bio(r, Side::Target) {
            Ok(s) => by_file.entry(export_file_name(r)).or_default().push(s),
            Err(e) => {
                say(out, format!("warning: skipping {}: {e}", r.id));
                summary.skipped.push((r.id.clone(), e.to_string()));
            }
        }
    }
    for (name, sentences) in by_file {
        let path = out_dir.join(name);
        summary.sentences += sentences.len();
        write_conll(&path, &sentences)?;
        summary.files.push(path);
    }
    say(
        out,
        format!(
            "{} sentence(s) in {} file(s) written to {}; {} skipped",
            summary.sentences,
            summary.files.len(),
            out_dir.display(),
            summary.skipped.len()
        ),
    );
    Ok(summary)
}

/// Writes the synthetic bilingual gold set.
pub fn synth(out_path: &Path, seed: u64, out: &mut dyn Write) -> Result<usize, PipelineError> {
    let gold = annobridge::synthetic::synthetic_gold(seed);
    let n = write_jsonl(out_path, &gold).map_err(|e| PipelineError::records(out_path, e))?;
    say(out, format!("{n} synthetic gold record(s) written to {} (seed {seed})", out_path.display()));
    Ok(n)
}
