//! `phishtriage`: ingest raw email, build corpora, classify them against an
//! LLM endpoint, score the outcomes, scan URLs, and guard a mailbox.
//!
//! Exit codes: 0 success, 1 operational failure (reported as a JSON line on
//! stderr), 2 usage error.

mod cmd;
mod config;
mod outcomes;
mod util;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "phishtriage",
    version,
    about = "Phishing email triage: ingest, clean, classify, evaluate, scan, watch"
)]
struct Cli {
    /// TOML settings file. Flags override environment variables, which
    /// override this file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize .eml files or CSV/JSON datasets into uniform records.
    Ingest(cmd::ingest::IngestArgs),
    /// Filter records by body length and report corpus statistics.
    Clean(cmd::clean::CleanArgs),
    /// Classify a corpus against a model endpoint, writing outcome lines.
    Classify(cmd::classify::ClassifyArgs),
    /// Score an outcomes file: confusion counts, metrics, reliability.
    Eval(cmd::eval::EvalArgs),
    /// Rank several models from outcome files or raw confusion counts.
    Compare(cmd::compare::CompareArgs),
    /// Analyze the URLs inside one .eml message.
    UrlScan(cmd::url_scan::UrlScanArgs),
    /// Watch a mailbox, quarantining what the classifier flags.
    Watch(cmd::watch::WatchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{line}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let settings = config::Settings::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Ingest(args) => cmd::ingest::run(args),
        Command::Clean(args) => cmd::clean::run(args),
        Command::Classify(args) => cmd::classify::run(args, &settings),
        Command::Eval(args) => cmd::eval::run(args),
        Command::Compare(args) => cmd::compare::run(args),
        Command::UrlScan(args) => cmd::url_scan::run(args, &settings),
        Command::Watch(args) => cmd::watch::run(args, &settings),
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_timestamp(None)
        .init();
}
