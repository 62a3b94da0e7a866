use std::collections::BTreeMap;

use anaphora_core::prompt::{Label, PromptInstance, Strategy};
use anaphora_core::response::{parse_response, Leniency, ParsedResponse, ResponseKind};
use serde::{Deserialize, Serialize};

use crate::args::ParseArgs;
use crate::error::CliError;
use crate::io::{read_jsonl, write_jsonl};
use crate::manifest::{beside, Manifest};

/// One raw response; extra fields such as `error` or `attempts` are ignored.
#[derive(Debug, Deserialize)]
pub struct RawLine {
    pub id: String,
    #[serde(default)]
    pub raw: Option<String>,
    #[serde(default)]
    pub expected_label: Option<Label>,
}

/// One parsed response. `kind` is null when there was no response at all.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedRecord {
    pub id: String,
    pub kind: Option<ResponseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_label: Option<Label>,
}

impl ParsedRecord {
    pub fn from_raw(
        strategy: Strategy,
        id: &str,
        raw: Option<&str>,
        mode: Leniency,
        expected_label: Option<Label>,
    ) -> Self {
        let parsed = raw
            .filter(|r| !r.trim().is_empty())
            .map(|r| parse_response(strategy, r, mode));
        ParsedRecord {
            id: id.to_string(),
            kind: parsed.as_ref().map(|p| p.kind),
            payload: parsed.and_then(|p| p.payload),
            expected_label,
        }
    }

    pub fn response(&self) -> Option<ParsedResponse> {
        self.kind.map(|kind| ParsedResponse {
            kind,
            payload: self.payload.clone(),
        })
    }
}

pub fn run(args: ParseArgs, mut manifest: Manifest) -> Result<(), CliError> {
    manifest.input(&args.input)?;
    let mode = if args.strict {
        Leniency::Strict
    } else {
        Leniency::Lenient
    };
    let mut labels = BTreeMap::new();
    if let Some(path) = &args.prompts {
        manifest.input(path)?;
        for p in read_jsonl::<PromptInstance>(path)? {
            if let Some(l) = p.expected_label {
                labels.insert(p.passage_id, l);
            }
        }
    }
    let lines: Vec<RawLine> = read_jsonl(&args.input)?;
    let records: Vec<ParsedRecord> = lines
        .iter()
        .map(|l| {
            let expected = l.expected_label.or_else(|| labels.get(&l.id).copied());
            ParsedRecord::from_raw(args.strategy, &l.id, l.raw.as_deref(), mode, expected)
        })
        .collect();
    let format_errors = records
        .iter()
        .filter(|r| r.kind == Some(ResponseKind::FormatError))
        .count();
    write_jsonl(&args.out, &records)?;
    manifest.output(&args.out);
    manifest.summary =
        serde_json::json!({ "records": records.len(), "format_errors": format_errors });
    manifest.finish(&beside(&args.out))?;
    println!(
        "{} responses parsed ({format_errors} format errors) into {}",
        records.len(),
        args.out.display()
    );
    Ok(())
}
