//! `compare`: rank several models in one report, from outcome files or from
//! already-tallied confusion counts (optionally with the metrics a source
//! states for them, to surface discrepancies).

use crate::outcomes;
use crate::util;
use anyhow::Result;
use clap::{ArgGroup, Args};
use phishtriage_core::{render_report, ConfusionCounts, ModelResult, StatedMetrics};
use std::path::PathBuf;

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("sources")
        .args(["predictions", "counts"])
        .required(true)
        .multiple(true)
))]
pub struct CompareArgs {
    /// Outcomes file as name=path. Repeatable.
    #[arg(long, value_name = "NAME=FILE", value_parser = parse_named_path)]
    pub predictions: Vec<NamedPath>,
    /// Confusion counts as name=tp,fp,tn,fn or
    /// name=tp,fp,tn,fn,precision,recall,f1,accuracy. Repeatable.
    #[arg(long, value_name = "NAME=COUNTS", value_parser = parse_counts)]
    pub counts: Vec<CountsSpec>,
    /// Write the report here (.csv or .json by extension).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct CountsSpec {
    pub name: String,
    pub counts: ConfusionCounts,
    pub stated: Option<StatedMetrics>,
}

fn parse_named_path(s: &str) -> Result<NamedPath, String> {
    let (name, path) = s
        .split_once('=')
        .ok_or_else(|| "expected name=path".to_string())?;
    if name.trim().is_empty() || path.trim().is_empty() {
        return Err("expected name=path".to_string());
    }
    Ok(NamedPath {
        name: name.trim().to_string(),
        path: PathBuf::from(path.trim()),
    })
}

fn parse_counts(s: &str) -> Result<CountsSpec, String> {
    let (name, rest) = s.split_once('=').ok_or_else(|| {
        "expected name=tp,fp,tn,fn or name=tp,fp,tn,fn,precision,recall,f1,accuracy".to_string()
    })?;
    if name.trim().is_empty() {
        return Err("empty model name".to_string());
    }
    let parts: Vec<&str> = rest.split(',').collect();
    if parts.len() != 4 && parts.len() != 8 {
        return Err(format!(
            "expected 4 or 8 comma-separated values, got {}",
            parts.len()
        ));
    }
    let int = |i: usize| -> Result<u64, String> {
        parts[i]
            .trim()
            .parse()
            .map_err(|e| format!("value {}: {e}", i + 1))
    };
    let counts = ConfusionCounts::new(int(0)?, int(1)?, int(2)?, int(3)?);
    let stated = if parts.len() == 8 {
        let num = |i: usize| -> Result<f64, String> {
            parts[i]
                .trim()
                .parse()
                .map_err(|e| format!("value {}: {e}", i + 1))
        };
        Some(StatedMetrics {
            precision: Some(num(4)?),
            recall: Some(num(5)?),
            f1: Some(num(6)?),
            accuracy: Some(num(7)?),
        })
    } else {
        None
    };
    Ok(CountsSpec {
        name: name.trim().to_string(),
        counts,
        stated,
    })
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let mut results: Vec<ModelResult> = Vec::new();
    for source in &args.predictions {
        let lines = outcomes::read_outcomes(&source.path)?;
        results.push(outcomes::model_result(&source.name, &lines)?);
    }
    for spec in &args.counts {
        results.push(ModelResult {
            model: spec.name.clone(),
            counts: spec.counts,
            unscored: 0,
            stated: spec.stated.clone(),
            reliability: None,
        });
    }
    let report = render_report(&results)?;
    print!("{}", report.to_text());
    if let Some(out) = &args.out {
        util::write_report(out, &report)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
