//! `watch`: poll a maildir, classify each arriving message, and sort it
//! into inbox/ or spam/ with a verdict report alongside.

use crate::config::{ModelFlags, Settings};
use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use phishtriage_core::{
    run_loop, FailPolicy, Gateway, HttpReputationClient, LoopOptions, MaildirAdapter,
    PromptOptions, UrlAnalyzer, Whitelist,
};
use std::fs;
use std::path::PathBuf;
use std::time::Duration;

#[derive(Debug, Args)]
pub struct WatchArgs {
    /// Mailbox root; inbox/ is polled, phishing moves to spam/ with a
    /// plain-language report in reports/.
    #[arg(long, value_name = "DIR")]
    pub maildir: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Trusted sender domain or address, delivered without classification.
    /// Repeatable.
    #[arg(long, value_name = "DOMAIN")]
    pub trust: Vec<String>,
    /// File of trusted senders, one per line.
    #[arg(long, value_name = "FILE")]
    pub trust_file: Option<PathBuf>,
    /// What to do with mail when the classifier is unreachable: deliver it
    /// unscanned (open) or leave it queued (closed).
    #[arg(long, value_enum, default_value_t = FailPolicyArg::Open)]
    pub fail_policy: FailPolicyArg,
    /// Seconds between polls of new/.
    #[arg(long, value_name = "SECS", default_value_t = 5.0, value_parser = parse_poll)]
    pub poll_secs: f64,
    /// Stop after this many poll cycles (default: run until killed).
    #[arg(long, value_name = "N")]
    pub cycles: Option<u64>,
    /// Scan URLs and append the findings to each prompt.
    #[arg(long)]
    pub url_analysis: bool,
    /// Embed the JSON response schema in each prompt.
    #[arg(long)]
    pub embed_schema: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FailPolicyArg {
    Open,
    Closed,
}

fn parse_poll(s: &str) -> Result<f64, String> {
    let secs: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !secs.is_finite() || secs < 0.0 {
        return Err("poll interval must be a non-negative number".to_string());
    }
    Ok(secs)
}

pub fn run(args: &WatchArgs, settings: &Settings) -> Result<()> {
    let cfg = settings.model_config(&args.model)?;

    let mut trusted: Vec<String> = settings.file.whitelist.clone().unwrap_or_default();
    trusted.extend(args.trust.iter().cloned());
    if let Some(path) = &args.trust_file {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        trusted.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        );
    }
    let whitelist = Whitelist::new(trusted);

    let policy = match args.fail_policy {
        FailPolicyArg::Open => FailPolicy::Open,
        FailPolicyArg::Closed => FailPolicy::Closed,
    };
    let mut gateway = Gateway::new(cfg, whitelist, policy)?;
    if args.url_analysis {
        let mut analyzer = UrlAnalyzer::new();
        if let Some(url) = settings.file.reputation_url.clone() {
            analyzer = analyzer.with_reputation(Box::new(HttpReputationClient::new(
                url,
                settings.reputation_key(),
            )));
        }
        gateway = gateway.with_analyzer(analyzer);
    }
    if args.embed_schema {
        gateway = gateway.with_prompt_options(PromptOptions {
            embed_schema: true,
            ..PromptOptions::default()
        });
    }

    let adapter = MaildirAdapter::open(&args.maildir)
        .with_context(|| format!("opening maildir {}", args.maildir.display()))?;
    let options = LoopOptions {
        poll_interval: Duration::from_secs_f64(args.poll_secs),
        max_cycles: args.cycles,
    };
    log::info!("watching {}", args.maildir.display());
    let stats = run_loop(&gateway, &adapter, &options);
    println!(
        "{} cycles: {} trusted, {} clean, {} quarantined, {} unscanned, {} deferred, {} failures",
        stats.cycles,
        stats.delivered_trusted,
        stats.delivered_clean,
        stats.moved_to_spam,
        stats.delivered_unscanned,
        stats.deferred,
        stats.failures
    );
    Ok(())
}
