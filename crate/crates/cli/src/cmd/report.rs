use std::collections::BTreeMap;

use super::{fmt_rate, write_reports, ScoreRecord};
use crate::args::ReportArgs;
use crate::error::CliError;
use crate::io::{load, read_jsonl};
use crate::manifest::Manifest;

pub fn run(args: ReportArgs, mut manifest: Manifest) -> Result<(), CliError> {
    manifest.inputs(&args.data.data)?;
    manifest.input(&args.scores)?;
    let ds = load(&args.data)?.dataset;
    let scores: Vec<ScoreRecord> = read_jsonl(&args.scores)?;
    let mut meta = BTreeMap::new();
    for kv in &args.meta {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--meta expects key=value, got {kv:?}")))?;
        meta.insert(k.trim().to_string(), v.trim().to_string());
    }
    let report = write_reports(
        &args.out_dir,
        &scores,
        &ds,
        meta,
        &args.formats,
        &mut manifest,
    )?;
    println!(
        "accuracy {} over {} results",
        fmt_rate(report.accuracy()),
        scores.len()
    );
    manifest.finish(&args.out_dir.join("manifest.json"))
}
