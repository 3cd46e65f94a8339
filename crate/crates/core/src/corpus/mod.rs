//! CoNLL-like BIO corpora: parsing, validation, repair, conversion to
//! records, and dataset audits.

mod audit;
mod bio;
mod conll;
mod convert;

pub use audit::{detect_duplicates, duplicate_count, entity_stats, DuplicateGroup, LabelStats};
pub use bio::{repair_bio, validate_bio, BioTag, BioViolation, ViolationKind};
pub use conll::{
    parse_conll, parse_conll_str, to_conll_string, write_conll, ConllSentence, TokenRow,
    MIN_COLUMNS,
};
pub use convert::{conll_to_record, record_to_bio, CONLL_EXTRA_KEY, SOURCE_FILE_KEY};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
    #[error("sentence {sentence_id} has {} BIO violation(s)", violations.len())]
    InvalidBio {
        sentence_id: String,
        violations: Vec<BioViolation>,
    },
    #[error("record {record_id} lacks {field}")]
    MissingSide { record_id: String, field: String },
    #[error("record {record_id} has overlapping spans: {}", span_ids.join(", "))]
    OverlappingSpans {
        record_id: String,
        span_ids: Vec<String>,
    },
}
