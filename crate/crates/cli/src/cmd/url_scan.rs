//! `url-scan`: analyze the URLs inside a single .eml message.

use crate::config::Settings;
use crate::util;
use anyhow::{Context, Result};
use clap::Args;
use phishtriage_core::{
    uniform_from_eml, HttpReputationClient, StubReputationClient, UrlAnalyzer,
};
use std::fs;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct UrlScanArgs {
    /// The .eml message to scan.
    #[arg(value_name = "EML")]
    pub input: PathBuf,
    /// Print the full report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Reputation endpoint to query per domain. The key comes from
    /// PHISHTRIAGE_REPUTATION_KEY or `reputation_key` in the config file.
    #[arg(long, value_name = "URL", conflicts_with_all = ["deny_list", "allow_list"])]
    pub reputation_url: Option<String>,
    /// Offline reputation: domains to report as malicious, one per line.
    #[arg(long, value_name = "FILE")]
    pub deny_list: Option<PathBuf>,
    /// Offline reputation: domains to report as clean, one per line.
    #[arg(long, value_name = "FILE")]
    pub allow_list: Option<PathBuf>,
}

pub fn run(args: &UrlScanArgs, settings: &Settings) -> Result<()> {
    let raw =
        fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let source = args.input.display().to_string();
    let output = uniform_from_eml(&raw, &source, None)
        .with_context(|| format!("parsing {}", args.input.display()))?;

    let mut analyzer = UrlAnalyzer::new();
    if args.deny_list.is_some() || args.allow_list.is_some() {
        let deny = match &args.deny_list {
            Some(path) => util::read_domain_lines(path)?,
            None => Vec::new(),
        };
        let allow = match &args.allow_list {
            Some(path) => util::read_domain_lines(path)?,
            None => Vec::new(),
        };
        analyzer = analyzer.with_reputation(Box::new(StubReputationClient::new(deny, allow)));
    } else if let Some(url) = args
        .reputation_url
        .clone()
        .or_else(|| settings.file.reputation_url.clone())
    {
        analyzer = analyzer
            .with_reputation(Box::new(HttpReputationClient::new(url, settings.reputation_key())));
    }

    let report = analyzer.analyze(&output.reduced, &output.uniform.email_text);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else if report.is_empty() {
        println!("no URLs found");
    } else {
        println!("{}", report.to_prompt_text(report.findings.len().max(1)));
    }
    Ok(())
}
