use std::collections::BTreeMap;

use anaphora_core::report::Format;
use anaphora_core::response::{score_parsed, ResponseKind};
use anaphora_core::scorer::{score_prediction, tokenize, Prediction};
use anaphora_core::{Dataset, ScoreResult};
use anyhow::Context;
use serde_json::Value;

use super::parse::ParsedRecord;
use super::{fmt_rate, write_reports, ScoreRecord};
use crate::args::ScoreArgs;
use crate::error::{CliError, OrExit};
use crate::io::{load, read_jsonl, write_jsonl};
use crate::manifest::Manifest;

/// Scores one line: either a prediction (`answer`, `tagged` or `span`) or a
/// parsed response (`kind`).
pub fn score_line(line: Value, ds: &Dataset) -> Result<ScoreRecord, CliError> {
    let id = line
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::invalid("prediction without an id"))?
        .to_string();
    let passage = ds
        .get(&id)
        .ok_or_else(|| CliError::invalid(format!("unknown passage id {id:?}")))?;
    let tokens = tokenize(&passage.text);
    let result: ScoreResult = if line.get("kind").is_some() {
        let rec: ParsedRecord = serde_json::from_value(line)
            .with_context(|| format!("{id}: invalid parsed record"))
            .or_invalid()?;
        if matches!(rec.kind, Some(ResponseKind::Yes | ResponseKind::No))
            && rec.expected_label.is_none()
        {
            return Err(CliError::invalid(format!(
                "{id}: yes/no response without expected_label"
            )));
        }
        score_parsed(
            rec.response().as_ref(),
            passage,
            &tokens,
            rec.expected_label,
        )
    } else {
        let pred: Prediction = serde_json::from_value(line)
            .with_context(|| format!("{id}: invalid prediction"))
            .or_invalid()?;
        score_prediction(&pred.payload, passage, &tokens)
            .with_context(|| format!("{id}: cannot score"))
            .or_invalid()?
    };
    Ok(ScoreRecord { id, result })
}

pub fn run(args: ScoreArgs, mut manifest: Manifest) -> Result<(), CliError> {
    manifest.inputs(&args.data.data)?;
    manifest.input(&args.predictions)?;
    let ds = load(&args.data)?.dataset;
    let lines: Vec<Value> = read_jsonl(&args.predictions)?;
    let scores = lines
        .into_iter()
        .map(|l| score_line(l, &ds))
        .collect::<Result<Vec<_>, _>>()?;
    let path = args.out_dir.join("scores.jsonl");
    write_jsonl(&path, &scores)?;
    manifest.output(&path);
    let meta = BTreeMap::from([(
        "predictions".to_string(),
        args.predictions.display().to_string(),
    )]);
    let report = write_reports(
        &args.out_dir,
        &scores,
        &ds,
        meta,
        &Format::ALL,
        &mut manifest,
    )?;
    println!(
        "accuracy {} over {} predictions",
        fmt_rate(report.accuracy()),
        scores.len()
    );
    manifest.summary = serde_json::json!({ "scored": scores.len(), "accuracy": report.accuracy() });
    manifest.finish(&args.out_dir.join("manifest.json"))
}
