//! `classify`: run a corpus through the model endpoint and record one
//! outcome line per record.

use crate::config::{ModelFlags, Settings};
use crate::outcomes::{self, OutcomeLine};
use crate::util;
use anyhow::{bail, Context, Result};
use clap::Args;
use phishtriage_core::{classify_batch, summarize_outcomes, Corpus, DiskCache};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Corpus to classify (.csv or .jsonl).
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Outcomes file to write (JSON lines).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Concurrent requests (default 4).
    #[arg(long, value_name = "N")]
    pub parallelism: Option<usize>,
    /// Cache directory; reruns replay cached verdicts without network calls.
    #[arg(long, value_name = "DIR")]
    pub cache: Option<PathBuf>,
    /// Classify only the first N records.
    #[arg(long, value_name = "N")]
    pub limit: Option<usize>,
}

pub fn run(args: &ClassifyArgs, settings: &Settings) -> Result<()> {
    let cfg = settings.model_config(&args.model)?;
    let mut records = util::read_records(&args.corpus)?;
    if let Some(limit) = args.limit {
        records.truncate(limit);
    }
    if records.is_empty() {
        bail!("{} has no records", args.corpus.display());
    }
    let corpus = Corpus::from_records(records);

    let parallelism = args
        .parallelism
        .or(settings.file.parallelism)
        .unwrap_or(4)
        .max(1);
    let cache = match args.cache.clone().or_else(|| settings.file.cache_dir.clone()) {
        Some(dir) => Some(
            DiskCache::open(&dir).with_context(|| format!("opening cache {}", dir.display()))?,
        ),
        None => None,
    };

    log::info!(
        "classifying {} records with {} ({} at a time)",
        corpus.records.len(),
        cfg.name,
        parallelism
    );
    let batch = classify_batch(&corpus, &cfg, parallelism, cache.as_ref())?;
    let lines: Vec<OutcomeLine> = corpus
        .records
        .iter()
        .zip(&batch)
        .map(|(record, outcome)| OutcomeLine::new(outcome, record.label, &cfg.name))
        .collect();
    util::write_atomic(&args.out, &outcomes::to_jsonl(&lines)?)?;

    let summary = summarize_outcomes(&batch);
    println!("{summary}");
    println!("wrote {}", args.out.display());
    if !batch.is_empty() && batch.iter().all(|o| o.verdict.is_none()) {
        bail!("every classification failed; outcomes kept in {}", args.out.display());
    }
    Ok(())
}
