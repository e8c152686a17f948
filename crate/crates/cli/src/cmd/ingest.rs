//! `ingest`: normalize raw messages and tabular datasets into uniform
//! records, one JSON object per line.

use crate::util;
use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use phishtriage_core::{
    load_tabular_dataset, reduce_and_normalize, uniform_from_eml, write_records_jsonl,
    ColumnMapping, Label, LabelSynonyms, TabularFormat, UniformRecord,
};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// .eml files, directories of them, or .csv/.json datasets.
    #[arg(required = true, value_name = "PATH")]
    pub inputs: Vec<PathBuf>,
    /// Output record file (JSON lines).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Treat every input as this format instead of inferring per file.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Attach this ground-truth label to every ingested message.
    #[arg(long, value_parser = parse_label)]
    pub label: Option<Label>,
    /// Subject column in tabular inputs.
    #[arg(long, value_name = "NAME")]
    pub subject_col: Option<String>,
    /// Sender column in tabular inputs.
    #[arg(long, value_name = "NAME")]
    pub sender_col: Option<String>,
    /// Body column in tabular inputs.
    #[arg(long, value_name = "NAME")]
    pub body_col: Option<String>,
    /// Label column in tabular inputs.
    #[arg(long, value_name = "NAME")]
    pub label_col: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Eml,
    Csv,
    Json,
}

pub fn parse_label(s: &str) -> Result<Label, String> {
    match s.to_ascii_lowercase().as_str() {
        "phishing" => Ok(Label::Phishing),
        "legit" => Ok(Label::Legit),
        _ => Err("expected `phishing` or `legit`".to_string()),
    }
}

pub fn run(args: &IngestArgs) -> Result<()> {
    let mut files = Vec::new();
    for input in &args.inputs {
        collect_files(input, &mut files)?;
    }
    if files.is_empty() {
        bail!("no input files found");
    }

    let mut records: Vec<UniformRecord> = Vec::new();
    let mut message_failures = 0usize;
    let mut row_failures = 0usize;
    for file in &files {
        match format_of(file, args.format)? {
            Format::Eml => {
                let raw =
                    fs::read(file).with_context(|| format!("reading {}", file.display()))?;
                let source = file.display().to_string();
                match uniform_from_eml(&raw, &source, args.label) {
                    Ok(output) => records.push(output.uniform),
                    Err(e) => {
                        message_failures += 1;
                        log::warn!("{}: {e}", file.display());
                    }
                }
            }
            tabular => {
                let format = match tabular {
                    Format::Csv => TabularFormat::Csv,
                    _ => TabularFormat::Json,
                };
                let mapping = ColumnMapping {
                    subject: args.subject_col.clone(),
                    sender: args.sender_col.clone(),
                    body: args.body_col.clone(),
                    label: args.label_col.clone(),
                };
                let source = file
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| file.display().to_string());
                let report = load_tabular_dataset(
                    file,
                    format,
                    &mapping,
                    &LabelSynonyms::default(),
                    &source,
                )
                .with_context(|| format!("loading {}", file.display()))?;
                row_failures += report.row_failures.len();
                for failure in &report.row_failures {
                    log::warn!("{} row {}: {}", file.display(), failure.row, failure.reason);
                }
                for record in &report.records {
                    records.push(reduce_and_normalize(record).uniform);
                }
            }
        }
    }

    let mut buf = Vec::new();
    write_records_jsonl(&mut buf, &records)?;
    util::write_atomic(&args.out, &buf)?;
    println!(
        "{} records from {} files -> {} ({} message failures, {} row failures)",
        records.len(),
        files.len(),
        args.out.display(),
        message_failures,
        row_failures
    );
    Ok(())
}

fn collect_files(input: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let meta =
        fs::metadata(input).with_context(|| format!("reading {}", input.display()))?;
    if meta.is_file() {
        out.push(input.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("listing {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            !p.file_name()
                .map(|n| n.to_string_lossy().starts_with('.'))
                .unwrap_or(true)
        })
        .collect();
    entries.sort();
    for entry in entries {
        collect_files(&entry, out)?;
    }
    Ok(())
}

fn format_of(path: &Path, forced: Option<Format>) -> Result<Format> {
    if let Some(format) = forced {
        return Ok(format);
    }
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "eml" => Ok(Format::Eml),
        "csv" => Ok(Format::Csv),
        "json" | "jsonl" | "ndjson" => Ok(Format::Json),
        _ => bail!(
            "cannot tell the format of {} from its extension; pass --format",
            path.display()
        ),
    }
}
