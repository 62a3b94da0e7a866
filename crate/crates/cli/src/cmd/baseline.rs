use std::collections::BTreeMap;

use anaphora_core::baseline::{
    ingest_conllu, plain_text_for_parser, resolve, Fallback, IngestError, IngestOptions,
};
use anaphora_core::report::Format;
use anaphora_core::scorer::{score_prediction, tokenize, Prediction};
use anyhow::Context;
use serde_json::json;

use super::{fmt_rate, write_reports, ScoreRecord};
use crate::args::{BaselineCmd, FallbackArg};
use crate::error::{CliError, ErrorKind, OrExit};
use crate::io::{load, write_json, write_jsonl, write_text};
use crate::manifest::{beside, Manifest};

pub fn run(cmd: BaselineCmd, mut manifest: Manifest) -> Result<(), CliError> {
    match cmd {
        BaselineCmd::Prepare { data, split, out } => {
            manifest.inputs(&data.data)?;
            let ds = load(&data)?.dataset;
            let (text, ids) = plain_text_for_parser(ds.split(split));
            let ids_path = out.with_extension("ids");
            write_text(&out, &text)?;
            write_text(&ids_path, &(ids.join("\n") + "\n"))?;
            manifest.output(&out);
            manifest.output(&ids_path);
            manifest.summary = json!({ "passages": ids.len() });
            manifest.finish(&beside(&out))?;
            println!(
                "{} passages written to {} (id order in {})",
                ids.len(),
                out.display(),
                ids_path.display()
            );
            Ok(())
        }
        BaselineCmd::Run {
            data,
            split,
            conllu,
            ids,
            fallback,
            out_dir,
        } => {
            manifest.inputs(&data.data)?;
            if !conllu.is_file() {
                return Err(CliError::config(format!(
                    "{} does not exist",
                    conllu.display()
                )));
            }
            manifest.input(&conllu)?;
            let ds = load(&data)?.dataset;
            let mut options = IngestOptions::default();
            if let Some(path) = &ids {
                manifest.input(path)?;
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read {}", path.display()))
                    .or_config()?;
                options.passage_order = Some(
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .map(str::to_string)
                        .collect(),
                );
            }
            let ingest = ingest_conllu(&conllu, &ds, &options).map_err(|e| match e {
                IngestError::Io { .. } => CliError::new(ErrorKind::Config, e),
                IngestError::MalformedConllu(_) => CliError::new(ErrorKind::Validation, e),
            })?;
            let parsed: BTreeMap<&str, _> = ingest
                .parsed
                .iter()
                .map(|p| (p.passage_id.as_str(), p))
                .collect();
            let skipped_path = out_dir.join("skipped.jsonl");
            write_jsonl(&skipped_path, &ingest.skipped)?;
            manifest.output(&skipped_path);

            let modes: &[Fallback] = match fallback {
                FallbackArg::Nearest => &[Fallback::Nearest],
                FallbackArg::Abstain => &[Fallback::Abstain],
                FallbackArg::Both => &[Fallback::Nearest, Fallback::Abstain],
            };
            let passages: Vec<_> = ds.split(split).collect();
            let mut summary = serde_json::Map::new();
            for &mode in modes {
                let dir = out_dir.join(mode.to_string());
                let mut predictions = Vec::with_capacity(passages.len());
                let mut scores = Vec::with_capacity(passages.len());
                for p in &passages {
                    let span = parsed.get(p.id.as_str()).and_then(|pp| resolve(pp, mode));
                    let prediction = Prediction::span(p.id.clone(), span);
                    let result = score_prediction(&prediction.payload, p, &tokenize(&p.text))
                        .with_context(|| format!("scoring {}", p.id))
                        .or_invalid()?;
                    scores.push(ScoreRecord {
                        id: p.id.clone(),
                        result,
                    });
                    predictions.push(prediction);
                }
                let pred_path = dir.join("predictions.jsonl");
                let score_path = dir.join("scores.jsonl");
                write_jsonl(&pred_path, &predictions)?;
                write_jsonl(&score_path, &scores)?;
                manifest.output(&pred_path);
                manifest.output(&score_path);
                let meta = BTreeMap::from([
                    ("system".to_string(), "rule-based baseline".to_string()),
                    ("fallback".to_string(), mode.to_string()),
                    ("split".to_string(), split.to_string()),
                ]);
                let report = write_reports(&dir, &scores, &ds, meta, &Format::ALL, &mut manifest)?;
                println!(
                    "fallback {mode}: accuracy {} over {} passages ({} parsed, {} skipped)",
                    fmt_rate(report.accuracy()),
                    passages.len(),
                    parsed.len(),
                    ingest.skipped.len()
                );
                summary.insert(
                    mode.to_string(),
                    json!({ "accuracy": report.accuracy(), "passages": passages.len() }),
                );
            }
            summary.insert("parsed".into(), json!(parsed.len()));
            summary.insert("skipped".into(), json!(ingest.skipped.len()));
            write_json(&out_dir.join("summary.json"), &summary)?;
            manifest.summary = summary.into();
            manifest.finish(&out_dir.join("manifest.json"))
        }
    }
}
