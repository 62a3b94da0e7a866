use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Cell, DistanceBucket, StratifiedReport};
use crate::corpus::{CorefType, PronounCategory, Subcorpus, UnknownValue};
use crate::scorer::FailureReason;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Json, Format::Csv, Format::Markdown];

    pub fn extension(&self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(UnknownValue {
                kind: "report format",
                value: s.to_string(),
            }),
        }
    }
}

pub fn emit(report: &StratifiedReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => to_csv(report),
        Format::Markdown => to_markdown(report),
    }
}

/// One non-empty cell, addressed by axis and stratum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CellRow {
    pub axis: String,
    pub stratum: String,
    /// Second key for the pronoun category by anaphora type axis.
    pub coref_type: Option<String>,
    pub total: usize,
    pub correct: usize,
    pub ambiguous: usize,
    pub failures: Vec<(FailureReason, usize)>,
}

impl CellRow {
    fn new(axis: &str, stratum: &str, coref_type: Option<&str>, cell: &Cell) -> Self {
        CellRow {
            axis: axis.into(),
            stratum: stratum.into(),
            coref_type: coref_type.map(String::from),
            total: cell.total,
            correct: cell.correct,
            ambiguous: cell.ambiguous,
            failures: FailureReason::ALL
                .iter()
                .map(|f| (*f, cell.failure_count(*f)))
                .collect(),
        }
    }
}

impl StratifiedReport {
    /// Every non-empty cell in a fixed order.
    pub fn rows(&self) -> Vec<CellRow> {
        let mut rows = Vec::new();
        if self.overall.total > 0 {
            rows.push(CellRow::new("overall", "all", None, &self.overall));
        }
        for (k, c) in &self.by_coref_type {
            rows.push(CellRow::new("coref_type", k.as_str(), None, c));
        }
        for (k, c) in &self.by_pronoun_category {
            rows.push(CellRow::new("pronoun_category", k.as_str(), None, c));
        }
        for (k, inner) in &self.by_pronoun_and_coref {
            for (t, c) in inner {
                rows.push(CellRow::new(
                    "pronoun_category_by_coref_type",
                    k.as_str(),
                    Some(t.as_str()),
                    c,
                ));
            }
        }
        for (k, c) in &self.by_distance {
            rows.push(CellRow::new("distance", k.as_str(), None, c));
        }
        for (k, c) in &self.by_subcorpus {
            rows.push(CellRow::new("subcorpus", k.as_str(), None, c));
        }
        rows
    }
}

const FIXED_COLUMNS: [&str; 7] = [
    "axis",
    "stratum",
    "coref_type",
    "total",
    "correct",
    "accuracy",
    "ambiguous",
];

fn to_csv(report: &StratifiedReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = FIXED_COLUMNS
        .iter()
        .copied()
        .chain(FailureReason::ALL.iter().map(|f| f.as_str()))
        .collect();
    w.write_record(&header).expect("in-memory write");
    for row in report.rows() {
        let mut record = vec![
            row.axis.clone(),
            row.stratum.clone(),
            row.coref_type.clone().unwrap_or_default(),
            row.total.to_string(),
            row.correct.to_string(),
            format!("{:.3}", row.correct as f64 / row.total as f64),
            row.ambiguous.to_string(),
        ];
        record.extend(row.failures.iter().map(|(_, n)| n.to_string()));
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv")
}

/// Reads back the cells of a CSV report.
pub fn read_csv_cells(csv_text: &str) -> Result<Vec<CellRow>, String> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing column {name:?}"))
    };
    let num = |rec: &csv::StringRecord, i: usize| -> Result<usize, String> {
        rec[i]
            .parse()
            .map_err(|_| format!("not a count: {:?}", &rec[i]))
    };
    let (axis, stratum, coref, total, correct, ambiguous) = (
        col("axis")?,
        col("stratum")?,
        col("coref_type")?,
        col("total")?,
        col("correct")?,
        col("ambiguous")?,
    );
    let failure_cols: Vec<(FailureReason, usize)> = FailureReason::ALL
        .iter()
        .map(|f| col(f.as_str()).map(|i| (*f, i)))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        rows.push(CellRow {
            axis: rec[axis].to_string(),
            stratum: rec[stratum].to_string(),
            coref_type: Some(rec[coref].to_string()).filter(|s| !s.is_empty()),
            total: num(&rec, total)?,
            correct: num(&rec, correct)?,
            ambiguous: num(&rec, ambiguous)?,
            failures: failure_cols
                .iter()
                .map(|(f, i)| num(&rec, *i).map(|n| (*f, n)))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(rows)
}

const ABSENT: &str = "\u{2212}";

fn acc(cell: Option<&Cell>) -> String {
    match cell.and_then(Cell::accuracy) {
        Some(a) => format!("{a:.3}"),
        None => ABSENT.to_string(),
    }
}

fn count(cell: Option<&Cell>) -> usize {
    cell.map_or(0, |c| c.total)
}

fn to_markdown(report: &StratifiedReport) -> String {
    let mut out = String::from("# Accuracy report\n\n");
    for (k, v) in &report.meta {
        let _ = writeln!(out, "- {k}: {v}");
    }
    if !report.meta.is_empty() {
        out.push('\n');
    }
    if report.is_empty() {
        out.push_str("No scored passages (0 results).\n");
        return out;
    }
    let overall = &report.overall;
    let _ = writeln!(
        out,
        "Scored passages: {}. Accuracy: {}. Format-error rate: {:.3}. Ambiguous answers: {}.\n",
        overall.total,
        acc(Some(overall)),
        overall.format_error_rate().unwrap_or(0.0),
        overall.ambiguous
    );

    let type_header = "|  | Grammatical | Textual | Average |\n| --- | --- | --- | --- |\n";
    out.push_str("## Accuracy by anaphora type\n\n");
    out.push_str(type_header);
    let _ = writeln!(
        out,
        "| Accuracy | {} | {} | {} |\n",
        acc(report.by_coref_type.get(&CorefType::Grammatical)),
        acc(report.by_coref_type.get(&CorefType::Textual)),
        acc(Some(overall)),
    );

    out.push_str("## Accuracy by pronoun category and anaphora type\n\n");
    out.push_str(type_header);
    for p in PronounCategory::ALL {
        let inner = report.by_pronoun_and_coref.get(&p);
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            p.as_str(),
            acc(inner.and_then(|m| m.get(&CorefType::Grammatical))),
            acc(inner.and_then(|m| m.get(&CorefType::Textual))),
            acc(report.by_pronoun_category.get(&p)),
        );
    }
    out.push('\n');

    out.push_str("## Accuracy by antecedent distance\n\n");
    out.push_str("| Distance | Accuracy | Passages |\n| --- | --- | --- |\n");
    for b in DistanceBucket::ALL {
        let c = report.by_distance.get(&b);
        let _ = writeln!(out, "| {} | {} | {} |", b.title(), acc(c), count(c));
    }
    out.push('\n');

    out.push_str("## Accuracy by subcorpus\n\n");
    out.push_str("| Subcorpus | Accuracy | Passages |\n| --- | --- | --- |\n");
    for s in Subcorpus::ALL {
        let c = report.by_subcorpus.get(&s);
        let _ = writeln!(
            out,
            "| {} ({}) | {} | {} |",
            s.as_str(),
            s.description(),
            acc(c),
            count(c)
        );
    }
    out.push('\n');

    out.push_str("## Failure reasons\n\n| Failure | Count |\n| --- | --- |\n");
    let failures: BTreeMap<_, _> = overall.failures.iter().filter(|(_, n)| **n > 0).collect();
    for f in FailureReason::ALL {
        if let Some(n) = failures.get(&f) {
            let _ = writeln!(out, "| {} | {} |", f.as_str(), n);
        }
    }
    out
}
