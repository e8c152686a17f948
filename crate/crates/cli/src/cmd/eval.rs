//! `eval`: score one outcomes file into a metrics report.

use crate::outcomes;
use crate::util;
use anyhow::{bail, Result};
use clap::Args;
use phishtriage_core::render_report;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Outcomes file from `classify`.
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    /// Row name in the report (default: the model recorded in the file).
    #[arg(long, value_name = "NAME")]
    pub name: Option<String>,
    /// Write the report here (.csv or .json by extension).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let lines = outcomes::read_outcomes(&args.predictions)?;
    if lines.is_empty() {
        bail!("{} has no outcome lines", args.predictions.display());
    }
    let name = args
        .name
        .clone()
        .unwrap_or_else(|| lines[0].model.clone());
    let result = outcomes::model_result(&name, &lines)?;
    let report = render_report(&[result])?;
    print!("{}", report.to_text());
    if let Some(out) = &args.out {
        util::write_report(out, &report)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
