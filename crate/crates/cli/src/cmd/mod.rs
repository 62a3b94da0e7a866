use std::collections::BTreeMap;
use std::path::Path;

use anaphora_core::report::{aggregate, emit, Format, StratifiedReport};
use anaphora_core::{Dataset, ScoreResult};
use serde::{Deserialize, Serialize};

use crate::args::{Cli, Command};
use crate::error::{CliError, OrExit};
use crate::io::write_text;
use crate::manifest::Manifest;

mod baseline;
mod export;
mod parse;
mod prompt;
mod report;
mod run;
mod score;
mod validate;

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    let manifest = Manifest::start(serde_json::to_value(&cli.command).unwrap_or_default());
    match cli.command {
        Command::Validate(a) => validate::run(a, manifest),
        Command::Export(a) => export::run(a, manifest),
        Command::Baseline(c) => baseline::run(c, manifest),
        Command::Prompt(c) => prompt::run(c, manifest),
        Command::Run(a) => run::run(a, manifest),
        Command::Parse(a) => parse::run(a, manifest),
        Command::Score(a) => score::run(a, manifest),
        Command::Report(a) => report::run(a, manifest),
    }
}

/// One line of a scores file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    #[serde(flatten)]
    pub result: ScoreResult,
}

/// Aggregates scores and writes `report.<ext>` for each format into `dir`.
pub fn write_reports(
    dir: &Path,
    scores: &[ScoreRecord],
    dataset: &Dataset,
    meta: BTreeMap<String, String>,
    formats: &[Format],
    manifest: &mut Manifest,
) -> Result<StratifiedReport, CliError> {
    let mut report =
        aggregate(scores.iter().map(|s| (s.id.as_str(), &s.result)), dataset).or_invalid()?;
    report.meta = meta;
    for f in formats {
        let path = dir.join(format!("report.{}", f.extension()));
        write_text(&path, &emit(&report, *f))?;
        manifest.output(&path);
    }
    Ok(report)
}

pub fn fmt_rate(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.3}"))
}
