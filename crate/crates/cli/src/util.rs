//! Small file-handling helpers shared by the verbs.

use anyhow::{bail, Context, Result};
use phishtriage_core::{
    read_corpus_csv, read_records_jsonl, write_corpus_csv, write_records_jsonl, Corpus, Report,
    UniformRecord,
};
use std::fs;
use std::path::{Path, PathBuf};

/// Writes to a sibling temp file, then renames into place, so readers never
/// observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}

fn extension(path: &Path) -> String {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default()
}

/// Reads records from a two-column corpus CSV or a JSONL record file,
/// deciding by extension.
pub fn read_records(path: &Path) -> Result<Vec<UniformRecord>> {
    let file =
        fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let records = match extension(path).as_str() {
        "csv" => read_corpus_csv(file).with_context(|| format!("reading {}", path.display()))?,
        "jsonl" | "ndjson" | "json" => read_records_jsonl(file)
            .with_context(|| format!("reading {}", path.display()))?,
        other => bail!(
            "cannot tell the format of {} from extension `{other}`; use .csv or .jsonl",
            path.display()
        ),
    };
    Ok(records)
}

/// Writes a corpus as CSV or JSONL, deciding by extension.
pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    let mut buf = Vec::new();
    match extension(path).as_str() {
        "csv" => write_corpus_csv(&mut buf, corpus)
            .with_context(|| format!("encoding {}", path.display()))?,
        "jsonl" | "ndjson" | "json" => write_records_jsonl(&mut buf, &corpus.records)
            .with_context(|| format!("encoding {}", path.display()))?,
        other => bail!(
            "cannot tell the format of {} from extension `{other}`; use .csv or .jsonl",
            path.display()
        ),
    }
    write_atomic(path, &buf)
}

/// Writes an evaluation report as CSV or JSON, deciding by extension.
pub fn write_report(path: &Path, report: &Report) -> Result<()> {
    let text = match extension(path).as_str() {
        "csv" => report.to_csv_string(),
        "json" => {
            let mut s = serde_json::to_string_pretty(&report.to_json())?;
            s.push('\n');
            s
        }
        other => bail!(
            "cannot tell the format of {} from extension `{other}`; use .csv or .json",
            path.display()
        ),
    };
    write_atomic(path, text.as_bytes())
}

/// Reads a one-domain-per-line list, skipping blanks and `#` comments.
pub fn read_domain_lines(path: &Path) -> Result<Vec<String>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}
