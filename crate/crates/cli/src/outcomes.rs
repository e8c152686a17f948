//! Line-delimited outcome records written by `classify` and read back by
//! `eval` and `compare`.

use anyhow::{Context, Result};
use phishtriage_core::{
    confusion_counts, reliability_score, ClassificationOutcome, Label, ModelResult, Verdict,
};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub category: String,
    pub message: String,
}

/// One line of an outcomes file. Exactly one of `verdict` and `error` is
/// present; `label` is the ground truth carried over from the corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeLine {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub latency_ms: u64,
    pub attempts: u32,
    pub model: String,
}

impl OutcomeLine {
    pub fn new(outcome: &ClassificationOutcome, label: Option<Label>, model: &str) -> Self {
        OutcomeLine {
            id: outcome.record_id.clone(),
            label,
            verdict: outcome.verdict.clone(),
            error: outcome.error.as_ref().map(|e| ErrorInfo {
                category: e.category().to_string(),
                message: e.to_string(),
            }),
            latency_ms: outcome.latency.as_millis() as u64,
            attempts: outcome.attempts,
            model: model.to_string(),
        }
    }
}

pub fn to_jsonl(lines: &[OutcomeLine]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_outcomes(path: &Path) -> Result<Vec<OutcomeLine>> {
    let file =
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: OutcomeLine = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}", path.display(), i + 1))?;
        lines.push(parsed);
    }
    Ok(lines)
}

/// Scores one model's outcome lines into a report row input. Reliability is
/// computed over the lines that produced a verdict.
pub fn model_result(name: &str, lines: &[OutcomeLine]) -> Result<ModelResult> {
    let tally = confusion_counts(lines.iter().map(|l| (l.label, l.verdict.as_ref())))
        .with_context(|| format!("scoring {name}"))?;
    let scored: Vec<(Option<Label>, &Verdict)> = lines
        .iter()
        .filter_map(|l| l.verdict.as_ref().map(|v| (l.label, v)))
        .collect();
    let reliability = if scored.is_empty() {
        None
    } else {
        Some(reliability_score(scored).with_context(|| format!("scoring {name}"))?)
    };
    Ok(ModelResult {
        model: name.to_string(),
        counts: tally.counts,
        unscored: tally.unscored,
        stated: None,
        reliability,
    })
}
