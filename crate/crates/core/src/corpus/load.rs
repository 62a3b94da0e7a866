//! JSON-lines and tabular dataset loading with per-record validation.
//!
//! Source column names are mapped onto canonical field names through an
//! [`AliasTable`]. Canonical fields:
//!
//! | field | content |
//! |---|---|
//! | `id` | opaque record id (defaults to `<file stem>:<line>`) |
//! | `sentence_ana` | passage with the anaphor tagged |
//! | `sentence_ant_ana` | passage with anaphor and antecedent tagged |
//! | `text` + `anaphor` | alternative to the tagged fields: plain text and `{start, end}` span |
//! | `anaphor_surface` | anaphor string |
//! | `antecedent_subtree` | subtree string or `{start, end}` span |
//! | `antecedent_root` | root string (located inside the subtree) or `{start, end}` span |
//! | `coref_type`, `pronoun_category`, `distance`, `subcorpus` | metadata |
//! | `anaphor_in_antecedent` | optional; derived from span containment when absent |
//! | `split` | optional when the split is implied by the file name or options |
//! | `sentence_count`, `word_count` | optional source tallies |

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use super::tags::parse_tagged_text;
use super::{AnaphoraMetadata, Dataset, Passage, Span, Split};
use crate::text::{char_len, char_slice, find_ws_insensitive, normalize_whitespace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    JsonLines,
    /// CSV, or TSV when the file extension is `.tsv`.
    Tabular,
}

impl DatasetFormat {
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("csv" | "tsv") => DatasetFormat::Tabular,
            _ => DatasetFormat::JsonLines,
        }
    }
}

const CANONICAL_FIELDS: &[&str] = &[
    "id",
    "text",
    "anaphor",
    "sentence_ana",
    "sentence_ant_ana",
    "anaphor_surface",
    "antecedent_subtree",
    "antecedent_root",
    "coref_type",
    "pronoun_category",
    "distance",
    "anaphor_in_antecedent",
    "subcorpus",
    "split",
    "sentence_count",
    "word_count",
];

const BUILTIN_ALIASES: &[(&str, &str)] = &[
    ("uid", "id"),
    ("passage_id", "id"),
    ("plain_text", "text"),
    ("sentence", "sentence_ana"),
    ("input", "sentence_ana"),
    ("tagged_sentence", "sentence_ana"),
    ("target", "sentence_ant_ana"),
    ("sentence_ana_ant", "sentence_ant_ana"),
    ("anaphora", "anaphor_surface"),
    ("anaphor_text", "anaphor_surface"),
    ("ana", "anaphor_surface"),
    ("anaphor_span", "anaphor"),
    ("antecedent", "antecedent_subtree"),
    ("subtree", "antecedent_subtree"),
    ("ant_subtree", "antecedent_subtree"),
    ("root", "antecedent_root"),
    ("ant_root", "antecedent_root"),
    ("type", "coref_type"),
    ("coref", "coref_type"),
    ("anaphora_type", "coref_type"),
    ("coreference_type", "coref_type"),
    ("pronoun", "pronoun_category"),
    ("pronoun_type", "pronoun_category"),
    ("pron_category", "pronoun_category"),
    ("category", "pronoun_category"),
    ("dist", "distance"),
    ("token_distance", "distance"),
    ("ana_in_ant", "anaphor_in_antecedent"),
    ("anaphor_in_ant", "anaphor_in_antecedent"),
    ("corpus", "subcorpus"),
    ("source", "subcorpus"),
    ("sentences", "sentence_count"),
    ("n_sentences", "sentence_count"),
    ("words", "word_count"),
    ("n_words", "word_count"),
];

/// Case-insensitive mapping from source column names to canonical fields.
#[derive(Debug, Clone)]
pub struct AliasTable(BTreeMap<String, String>);

impl Default for AliasTable {
    fn default() -> Self {
        let mut map: BTreeMap<String, String> = CANONICAL_FIELDS
            .iter()
            .map(|f| (f.to_string(), f.to_string()))
            .collect();
        for (alias, canonical) in BUILTIN_ALIASES {
            map.insert(alias.to_string(), canonical.to_string());
        }
        AliasTable(map)
    }
}

impl AliasTable {
    /// Adds or overrides an alias. Unknown canonical names are rejected.
    pub fn with(mut self, alias: &str, canonical: &str) -> Result<Self, String> {
        if !CANONICAL_FIELDS.contains(&canonical) {
            return Err(format!("unknown canonical field {canonical:?}"));
        }
        self.0
            .insert(alias.to_ascii_lowercase(), canonical.to_string());
        Ok(self)
    }

    /// Reads a JSON object `{"source_name": "canonical_name", ...}` on top of
    /// the built-in table.
    pub fn from_json_str(json: &str) -> Result<Self, String> {
        let extra: BTreeMap<String, String> =
            serde_json::from_str(json).map_err(|e| e.to_string())?;
        extra
            .iter()
            .try_fold(AliasTable::default(), |t, (a, c)| t.with(a, c))
    }

    pub fn resolve(&self, name: &str) -> Option<&str> {
        self.0
            .get(&name.trim().to_ascii_lowercase())
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Forced format; inferred from the extension when `None`.
    pub format: Option<DatasetFormat>,
    /// Fail the whole load on any rejected record.
    pub strict: bool,
    pub aliases: AliasTable,
    /// Split for records without a `split` field. When `None`, the split is
    /// inferred from the file name (`train`, `validation`/`dev`, `test`).
    pub default_split: Option<Split>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionKind {
    /// The line is not a JSON object / not a readable row.
    Parse,
    /// A required field is missing or has the wrong type.
    Schema,
    /// The record violates a passage invariant.
    InvariantViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Rejection {
    /// 1-based record line (data rows for tabular files).
    pub line: usize,
    pub id: Option<String>,
    pub kind: RejectionKind,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read table {path}: {source}")]
    Table {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{} record(s) rejected in strict mode; first at line {}: {}", .0.len(), .0[0].line, .0[0].reason)]
    Rejected(Vec<Rejection>),
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
}

type Record = BTreeMap<String, Value>;

fn split_from_path(path: &Path) -> Option<Split> {
    let stem = path.file_stem()?.to_str()?.to_ascii_lowercase();
    stem.split(|c: char| !c.is_ascii_alphanumeric())
        .find_map(|part| part.parse::<Split>().ok())
}

/// Loads one dataset file.
pub fn load_dataset(path: &Path, options: &LoadOptions) -> Result<LoadReport, LoadError> {
    let format = options
        .format
        .unwrap_or_else(|| DatasetFormat::from_path(path));
    let io_err = |source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("record")
        .to_string();
    let default_split = options.default_split.or_else(|| split_from_path(path));

    let mut rows: Vec<(usize, Result<Record, String>)> = Vec::new();
    match format {
        DatasetFormat::JsonLines => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<Value>(&line)
                    .map_err(|e| format!("invalid JSON: {e}"))
                    .and_then(|v| match v {
                        Value::Object(m) => Ok(m.into_iter().collect()),
                        _ => Err("record is not a JSON object".to_string()),
                    });
                rows.push((i + 1, parsed));
            }
        }
        DatasetFormat::Tabular => {
            let delimiter = if path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
            {
                b'\t'
            } else {
                b','
            };
            let table_err = |source| LoadError::Table {
                path: path.to_path_buf(),
                source,
            };
            let mut reader = csv::ReaderBuilder::new()
                .delimiter(delimiter)
                .flexible(true)
                .from_reader(file);
            let headers = reader.headers().map_err(table_err)?.clone();
            for (i, row) in reader.records().enumerate() {
                let parsed = row.map_err(|e| format!("unreadable row: {e}")).map(|row| {
                    headers
                        .iter()
                        .zip(row.iter())
                        .filter(|(_, v)| !v.is_empty())
                        .map(|(h, v)| (h.to_string(), Value::String(v.to_string())))
                        .collect()
                });
                rows.push((i + 1, parsed));
            }
        }
    }

    let mut passages = Vec::new();
    let mut rejections = Vec::new();
    let mut seen_ids = HashSet::new();
    for (line, row) in rows {
        let record = match row {
            Ok(r) => canonicalize(r, &options.aliases),
            Err(reason) => {
                rejections.push(Rejection {
                    line,
                    id: None,
                    kind: RejectionKind::Parse,
                    reason,
                });
                continue;
            }
        };
        let id = get_string(&record, "id").unwrap_or_else(|| format!("{stem}:{line}"));
        match build_passage(&record, id.clone(), default_split) {
            Ok(p) if !seen_ids.insert(p.id.clone()) => rejections.push(Rejection {
                line,
                id: Some(id),
                kind: RejectionKind::InvariantViolation,
                reason: "duplicate passage id".into(),
            }),
            Ok(p) => passages.push(p),
            Err((kind, reason)) => rejections.push(Rejection {
                line,
                id: Some(id),
                kind,
                reason,
            }),
        }
    }

    if options.strict && !rejections.is_empty() {
        return Err(LoadError::Rejected(rejections));
    }
    let dataset = Dataset::new(passages).expect("passages validated individually");
    Ok(LoadReport {
        dataset,
        rejections,
    })
}

/// Loads several files (typically one per split) into one dataset.
/// Ids must be unique across files.
pub fn load_splits(paths: &[PathBuf], options: &LoadOptions) -> Result<LoadReport, LoadError> {
    let mut merged = LoadReport::default();
    let mut seen: HashSet<String> = HashSet::new();
    for path in paths {
        let mut report = load_dataset(path, options)?;
        let (keep, dupes): (Vec<Passage>, Vec<Passage>) = report
            .dataset
            .passages()
            .iter()
            .cloned()
            .partition(|p| !seen.contains(&p.id));
        for p in dupes {
            report.rejections.push(Rejection {
                line: 0,
                id: Some(p.id),
                kind: RejectionKind::InvariantViolation,
                reason: format!("duplicate passage id across files ({})", path.display()),
            });
        }
        seen.extend(keep.iter().map(|p| p.id.clone()));
        let ds = Dataset::new(keep).expect("already validated");
        merged.dataset = std::mem::take(&mut merged.dataset).merge(ds);
        merged.rejections.extend(report.rejections);
    }
    if options.strict && !merged.rejections.is_empty() {
        return Err(LoadError::Rejected(merged.rejections));
    }
    Ok(merged)
}

fn canonicalize(raw: Record, aliases: &AliasTable) -> Record {
    let mut out = Record::new();
    for (k, v) in raw {
        if v.is_null() {
            continue;
        }
        if let Some(canonical) = aliases.resolve(&k) {
            out.entry(canonical.to_string()).or_insert(v);
        }
    }
    out
}

type Reject = (RejectionKind, String);

fn schema(msg: impl Into<String>) -> Reject {
    (RejectionKind::Schema, msg.into())
}

fn invariant(msg: impl Into<String>) -> Reject {
    (RejectionKind::InvariantViolation, msg.into())
}

fn get_string(r: &Record, key: &str) -> Option<String> {
    match r.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn require_string(r: &Record, key: &str) -> Result<String, Reject> {
    get_string(r, key).ok_or_else(|| schema(format!("missing field `{key}`")))
}

/// `{"start": s, "end": e}` or `[s, e]`.
fn get_span(r: &Record, key: &str) -> Option<Result<Span, Reject>> {
    let v = r.get(key)?;
    let pair = match v {
        Value::Object(m) => m
            .get("start")
            .and_then(Value::as_u64)
            .zip(m.get("end").and_then(Value::as_u64)),
        Value::Array(a) if a.len() == 2 => a[0].as_u64().zip(a[1].as_u64()),
        _ => return None,
    };
    Some(
        pair.map(|(s, e)| Span {
            start: s as usize,
            end: e as usize,
        })
        .ok_or_else(|| schema(format!("field `{key}` is not a valid span"))),
    )
}

fn parse_field<T: std::str::FromStr>(r: &Record, key: &str) -> Result<T, Reject>
where
    T::Err: std::fmt::Display,
{
    require_string(r, key)?
        .parse::<T>()
        .map_err(|e| schema(format!("field `{key}`: {e}")))
}

fn parse_bool(r: &Record, key: &str) -> Result<Option<bool>, Reject> {
    match r.get(key) {
        None => Ok(None),
        Some(Value::Bool(b)) => Ok(Some(*b)),
        Some(Value::Number(n)) => Ok(Some(n.as_i64() != Some(0))),
        Some(Value::String(s)) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" | "t" => Ok(Some(true)),
            "false" | "0" | "no" | "f" => Ok(Some(false)),
            _ => Err(schema(format!("field `{key}` is not a boolean"))),
        },
        Some(_) => Err(schema(format!("field `{key}` is not a boolean"))),
    }
}

fn parse_count(r: &Record, key: &str) -> Result<Option<usize>, Reject> {
    match get_string(r, key) {
        None => Ok(None),
        Some(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| schema(format!("field `{key}` is not a count"))),
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Occurrence ranks: token-aligned occurrences first, then by position.
fn token_aligned(chars: &[char], s: Span) -> bool {
    let left = s.start == 0 || !is_word_char(chars[s.start - 1]) || !is_word_char(chars[s.start]);
    let right =
        s.end == chars.len() || !is_word_char(chars[s.end]) || !is_word_char(chars[s.end - 1]);
    left && right
}

fn locate_subtree(text: &str, needle: &str, anaphor: Span, inside: Option<bool>) -> Option<Span> {
    let chars: Vec<char> = text.chars().collect();
    let mut hits = find_ws_insensitive(text, needle);
    hits.retain(|h| !h.overlaps(&anaphor) || h.contains(&anaphor));
    if let Some(flag) = inside {
        let filtered: Vec<Span> = hits
            .iter()
            .copied()
            .filter(|h| h.contains(&anaphor) == flag)
            .collect();
        if !filtered.is_empty() {
            hits = filtered;
        }
    }
    let aligned: Vec<Span> = hits
        .iter()
        .copied()
        .filter(|h| token_aligned(&chars, *h))
        .collect();
    if !aligned.is_empty() {
        hits = aligned;
    }
    // Prefer the closest occurrence before the anaphor, then the first one.
    hits.iter()
        .filter(|h| h.end <= anaphor.start)
        .max_by_key(|h| h.end)
        .or_else(|| hits.first())
        .copied()
}

fn locate_root(text: &str, needle: &str, subtree: Span) -> Result<Span, Reject> {
    let chars: Vec<char> = text.chars().collect();
    let hits = find_ws_insensitive(text, needle);
    if hits.is_empty() {
        return Err(invariant(format!(
            "antecedent root {needle:?} does not occur in the passage text"
        )));
    }
    let inside: Vec<Span> = hits.into_iter().filter(|h| subtree.contains(h)).collect();
    inside
        .iter()
        .find(|h| token_aligned(&chars, **h))
        .or_else(|| inside.first())
        .copied()
        .ok_or_else(|| {
            invariant(format!(
                "antecedent root {needle:?} lies outside the antecedent subtree"
            ))
        })
}

fn build_passage(r: &Record, id: String, default_split: Option<Split>) -> Result<Passage, Reject> {
    let tagged_ana = get_string(r, "sentence_ana")
        .map(|s| parse_tagged_text(&s).map_err(|e| invariant(format!("sentence_ana: {e}"))))
        .transpose()?;
    let tagged_both = get_string(r, "sentence_ant_ana")
        .map(|s| parse_tagged_text(&s).map_err(|e| invariant(format!("sentence_ant_ana: {e}"))))
        .transpose()?;

    let (text, anaphor) = if let Some(t) = tagged_ana.as_ref().or(tagged_both.as_ref()) {
        let ana = t
            .ana
            .ok_or_else(|| invariant("tagged sentence has no <ana> pair"))?;
        (t.plain.clone(), ana)
    } else {
        let text = require_string(r, "text")?;
        let ana = get_span(r, "anaphor")
            .ok_or_else(|| schema("missing field `sentence_ana` (or `text` + `anaphor`)"))??;
        (text, ana)
    };
    let len = char_len(&text);
    if !anaphor.is_valid_for(len) {
        return Err(invariant(format!("anaphor span {anaphor} out of range")));
    }
    if let (Some(a), Some(b)) = (&tagged_ana, &tagged_both) {
        if a.plain != b.plain || a.ana != b.ana {
            return Err(invariant(
                "sentence_ana and sentence_ant_ana disagree on text or anaphor",
            ));
        }
    }

    let in_ant_flag = parse_bool(r, "anaphor_in_antecedent")?;
    let tag_subtree = tagged_ana
        .as_ref()
        .and_then(|t| t.ant)
        .or(tagged_both.as_ref().and_then(|t| t.ant));
    let subtree = match (tag_subtree, get_span(r, "antecedent_subtree")) {
        (_, Some(span)) => span?,
        (Some(span), None) => {
            if let Some(s) = get_string(r, "antecedent_subtree") {
                if normalize_whitespace(&s) != normalize_whitespace(char_slice(&text, span)) {
                    return Err(invariant(format!(
                        "antecedent_subtree {s:?} does not match the tagged antecedent"
                    )));
                }
            }
            span
        }
        (None, None) => {
            let s = require_string(r, "antecedent_subtree")?;
            locate_subtree(&text, &s, anaphor, in_ant_flag).ok_or_else(|| {
                invariant(format!(
                    "antecedent subtree {s:?} does not occur in the text"
                ))
            })?
        }
    };
    if !subtree.is_valid_for(len) {
        return Err(invariant(format!(
            "antecedent subtree span {subtree} out of range"
        )));
    }

    let root = match get_span(r, "antecedent_root") {
        Some(span) => span?,
        None => {
            let s = require_string(r, "antecedent_root")?;
            locate_root(&text, &s, subtree)?
        }
    };

    let anaphor_surface = match get_string(r, "anaphor_surface") {
        Some(s) => s,
        None => char_slice(&text, anaphor).to_string(),
    };

    let split = match get_string(r, "split") {
        Some(s) => s
            .parse()
            .map_err(|e| schema(format!("field `split`: {e}")))?,
        None => default_split.ok_or_else(|| schema("missing field `split`"))?,
    };
    let distance = require_string(r, "distance")?
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|d| d.fract() == 0.0)
        .map(|d| d as i64)
        .ok_or_else(|| schema("field `distance` is not an integer"))?;

    let metadata = AnaphoraMetadata {
        coref_type: parse_field(r, "coref_type")?,
        pronoun_category: parse_field(r, "pronoun_category")?,
        distance,
        anaphor_in_antecedent: in_ant_flag.unwrap_or_else(|| subtree.contains(&anaphor)),
        subcorpus: parse_field(r, "subcorpus")?,
        split,
    };
    let passage = Passage {
        id,
        text,
        anaphor,
        anaphor_surface,
        antecedent_subtree: subtree,
        antecedent_root: root,
        metadata,
        sentence_count: parse_count(r, "sentence_count")?,
        word_count: parse_count(r, "word_count")?,
    };
    passage.validate().map_err(|e| invariant(e.to_string()))?;
    Ok(passage)
}
