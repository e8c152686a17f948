//! `clean`: filter records to a body-length band and report corpus
//! statistics.

use crate::util;
use anyhow::Result;
use clap::Args;
use phishtriage_core::{corpus_stats, filter_corpus, MAX_BODY_CHARS, MIN_BODY_CHARS};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct CleanArgs {
    /// Record file from `ingest` (.jsonl) or a corpus CSV.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Write the filtered corpus here (.csv or .jsonl by extension).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Keep bodies of at least this many characters.
    #[arg(long, value_name = "N", default_value_t = MIN_BODY_CHARS)]
    pub min_chars: usize,
    /// Keep bodies of at most this many characters.
    #[arg(long, value_name = "N", default_value_t = MAX_BODY_CHARS)]
    pub max_chars: usize,
    /// Print the statistics as JSON.
    #[arg(long)]
    pub json: bool,
}

pub fn run(args: &CleanArgs) -> Result<()> {
    let records = util::read_records(&args.input)?;
    let read = records.len();
    let corpus = filter_corpus(records, args.min_chars, args.max_chars);
    let stats = corpus_stats(&corpus);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&stats)?);
    } else {
        let counts = &stats.counts;
        println!(
            "kept {} of {} records: {} phishing, {} legit, {} unlabeled",
            counts.total, read, counts.phishing, counts.legit, counts.unlabeled
        );
        if counts.total > 0 {
            println!(
                "body chars: min {}, max {}, mean {:.1}, deciles {:?}",
                stats.len_min, stats.len_max, stats.len_mean, stats.len_deciles
            );
        }
    }
    if let Some(out) = &args.out {
        util::write_corpus(out, &corpus)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
