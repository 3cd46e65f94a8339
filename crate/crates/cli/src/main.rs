use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use annobridge::metrics::Distance;
use annobridge_cli::commands::{self, StageOptions};
use annobridge_cli::{PipelineConfig, PipelineError};
use clap::{Parser, Subcommand};

/// Transfer NER annotations from English to Russian with a chat model.
#[derive(Parser)]
#[command(name = "annobridge", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for translate and transfer.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Use the offline mock chat and embedding services.
    #[arg(long, global = true)]
    mock: bool,
    /// Seed for generated fixtures.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a directory of CoNLL-like files to a JSONL record file.
    Convert {
        corpus_dir: PathBuf,
        out: PathBuf,
        /// Rewrite illegal I- tags to B- instead of skipping the sentence.
        #[arg(long)]
        repair_bio: bool,
    },
    /// Report duplicates, BIO violations and entity statistics.
    Audit {
        /// Record file or corpus directory.
        input: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Translate the source text of every pending record.
    Translate {
        records: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Project spans onto the translations.
    Transfer {
        records: PathBuf,
        out: PathBuf,
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long)]
        no_fuzzy: bool,
        #[arg(long)]
        fuzzy_threshold: Option<f64>,
    },
    /// Score transferred spans against a gold set.
    EvalTransfer {
        gold: PathBuf,
        sys: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Score translations against a gold set.
    EvalTranslation {
        gold: PathBuf,
        sys: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Skip the embedding metrics.
        #[arg(long)]
        bleu_only: bool,
        /// Euclidean instead of cosine distance for the embedding metrics.
        #[arg(long)]
        euclidean: bool,
        /// Add-one smoothing for higher-order BLEU precisions.
        #[arg(long)]
        smoothing: bool,
    },
    /// Write the target side of the records as CoNLL files.
    Export { records: PathBuf, out_dir: PathBuf },
    /// Write a synthetic bilingual gold set (uses --seed).
    Synth { out: PathBuf },
}

#[derive(clap::Args)]
struct StageArgs {
    /// Answer with the gold target side of this record file (implies --mock).
    #[arg(long)]
    mock_gold: Option<PathBuf>,
    /// Stop after this many records, as if interrupted.
    #[arg(long)]
    limit: Option<usize>,
    /// Ledger file; defaults to <out>.ledger.jsonl.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<u8> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;

    let code = match cli.command {
        Command::Convert { corpus_dir, out: dest, repair_bio } => {
            commands::convert(&corpus_dir, &dest, repair_bio, out)?;
            0
        }
        Command::Audit { input, json } => {
            let report = commands::audit(&input, out)?;
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report)?;
                std::fs::write(&path, text + "\n").with_context(|| path.display().to_string())?;
            }
            0
        }
        Command::Translate { records, out: dest, stage } => {
            let backend = commands::chat_backend(&cfg, cli.mock, stage.mock_gold.as_deref())?;
            let opts = stage_options(&cli.mock, &stage);
            commands::translate(&records, &dest, &cfg, backend.as_ref(), &opts, out)?.exit_code()
        }
        Command::Transfer { records, out: dest, stage, no_fuzzy, fuzzy_threshold } => {
            if no_fuzzy {
                cfg.transfer.fuzzy_enabled = false;
            }
            if let Some(t) = fuzzy_threshold {
                cfg.transfer.fuzzy_threshold = t;
            }
            cfg.validate()?;
            let backend = commands::chat_backend(&cfg, cli.mock, stage.mock_gold.as_deref())?;
            let opts = stage_options(&cli.mock, &stage);
            commands::transfer(&records, &dest, &cfg, backend.as_ref(), &opts, out)?.exit_code()
        }
        Command::EvalTransfer { gold, sys, json } => {
            commands::eval_transfer(&gold, &sys, json.as_deref(), out)?;
            0
        }
        Command::EvalTranslation { gold, sys, json, bleu_only, euclidean, smoothing } => {
            if euclidean {
                cfg.distance = Distance::Euclidean;
            }
            cfg.bleu.smoothing |= smoothing;
            let embedder = if bleu_only {
                None
            } else {
                Some(commands::embedding_backend(&cfg, cli.mock)?.ok_or_else(|| {
                    PipelineError::Config("no [embedding] endpoint configured (pass --bleu-only or --mock)".into())
                })?)
            };
            commands::eval_translation(&gold, &sys, &cfg, embedder.as_deref(), json.as_deref(), out)?;
            0
        }
        Command::Export { records, out_dir } => {
            commands::export(&records, &out_dir, out)?;
            0
        }
        Command::Synth { out: dest } => {
            commands::synth(&dest, cli.seed, out)?;
            0
        }
    };
    Ok(code)
}

fn stage_options(mock: &bool, stage: &StageArgs) -> StageOptions {
    StageOptions {
        mock: *mock || stage.mock_gold.is_some(),
        limit: stage.limit,
        ledger: stage.ledger.clone(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = e.downcast_ref::<PipelineError>().map_or(1, PipelineError::exit_code);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
