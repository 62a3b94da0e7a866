//! Stratified accuracy reports.
//!
//! Cells with no scored passages are absent rather than reported as 0.0.
//! Accuracy is rounded to three decimals only when rendered.

mod emit;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnaphoraMetadata, CorefType, Dataset, PronounCategory, Subcorpus};
use crate::scorer::{FailureReason, ScoreResult};

pub use emit::{emit, read_csv_cells, CellRow, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceBucket {
    Cataphora,
    AnaphorInAntecedent,
    #[serde(rename = "d0_5")]
    D0To5,
    #[serde(rename = "d6_10")]
    D6To10,
    #[serde(rename = "d11_20")]
    D11To20,
    #[serde(rename = "d21_30")]
    D21To30,
    #[serde(rename = "d31_plus")]
    D31Plus,
}

impl DistanceBucket {
    pub const ALL: [DistanceBucket; 7] = [
        DistanceBucket::Cataphora,
        DistanceBucket::AnaphorInAntecedent,
        DistanceBucket::D0To5,
        DistanceBucket::D6To10,
        DistanceBucket::D11To20,
        DistanceBucket::D21To30,
        DistanceBucket::D31Plus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DistanceBucket::Cataphora => "cataphora",
            DistanceBucket::AnaphorInAntecedent => "anaphor_in_antecedent",
            DistanceBucket::D0To5 => "d0_5",
            DistanceBucket::D6To10 => "d6_10",
            DistanceBucket::D11To20 => "d11_20",
            DistanceBucket::D21To30 => "d21_30",
            DistanceBucket::D31Plus => "d31_plus",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            DistanceBucket::Cataphora => "Cataphora",
            DistanceBucket::AnaphorInAntecedent => "Anaphor in antecedent",
            DistanceBucket::D0To5 => "0-5",
            DistanceBucket::D6To10 => "6-10",
            DistanceBucket::D11To20 => "11-20",
            DistanceBucket::D21To30 => "21-30",
            DistanceBucket::D31Plus => "31+",
        }
    }
}

impl fmt::Display for DistanceBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The in-antecedent flag wins; otherwise a negative distance is cataphora
/// and the rest is binned by value.
pub fn bucket_distance(meta: &AnaphoraMetadata) -> DistanceBucket {
    if meta.anaphor_in_antecedent {
        return DistanceBucket::AnaphorInAntecedent;
    }
    match meta.distance {
        d if d < 0 => DistanceBucket::Cataphora,
        0..=5 => DistanceBucket::D0To5,
        6..=10 => DistanceBucket::D6To10,
        11..=20 => DistanceBucket::D11To20,
        21..=30 => DistanceBucket::D21To30,
        _ => DistanceBucket::D31Plus,
    }
}

/// Outcome counts for one stratum.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CellJson", from = "CellJson")]
pub struct Cell {
    pub total: usize,
    pub correct: usize,
    pub failures: BTreeMap<FailureReason, usize>,
    /// Answers that occurred more than once in the passage.
    pub ambiguous: usize,
}

#[derive(Serialize, Deserialize)]
struct CellJson {
    total: usize,
    correct: usize,
    #[serde(default, skip_deserializing)]
    accuracy: Option<f64>,
    #[serde(default)]
    failures: BTreeMap<FailureReason, usize>,
    #[serde(default)]
    ambiguous: usize,
}

impl From<Cell> for CellJson {
    fn from(c: Cell) -> Self {
        CellJson {
            accuracy: c.accuracy(),
            total: c.total,
            correct: c.correct,
            failures: c.failures,
            ambiguous: c.ambiguous,
        }
    }
}

impl From<CellJson> for Cell {
    fn from(c: CellJson) -> Self {
        Cell {
            total: c.total,
            correct: c.correct,
            failures: c.failures,
            ambiguous: c.ambiguous,
        }
    }
}

impl Cell {
    fn add(&mut self, r: &ScoreResult) {
        self.total += 1;
        match r.failure() {
            None => self.correct += 1,
            Some(f) => *self.failures.entry(f).or_default() += 1,
        }
        if r.ambiguous {
            self.ambiguous += 1;
        }
    }

    /// `None` for an empty cell.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.correct as f64 / self.total as f64)
    }

    pub fn failure_count(&self, reason: FailureReason) -> usize {
        self.failures.get(&reason).copied().unwrap_or(0)
    }

    pub fn format_error_rate(&self) -> Option<f64> {
        (self.total > 0)
            .then(|| self.failure_count(FailureReason::FormatError) as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StratifiedReport {
    /// Free-form run description (model, strategy, shots, negative ratio...).
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
    pub overall: Cell,
    pub by_coref_type: BTreeMap<CorefType, Cell>,
    pub by_pronoun_category: BTreeMap<PronounCategory, Cell>,
    pub by_pronoun_and_coref: BTreeMap<PronounCategory, BTreeMap<CorefType, Cell>>,
    pub by_distance: BTreeMap<DistanceBucket, Cell>,
    pub by_subcorpus: BTreeMap<Subcorpus, Cell>,
}

impl StratifiedReport {
    pub fn accuracy(&self) -> Option<f64> {
        self.overall.accuracy()
    }

    pub fn format_error_rate(&self) -> Option<f64> {
        self.overall.format_error_rate()
    }

    pub fn is_empty(&self) -> bool {
        self.overall.total == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("result for unknown passage id {0:?}")]
    UnknownId(String),
    #[error("more than one result for passage id {0:?}")]
    DuplicateId(String),
}

/// Aggregates per-passage results into every stratification at once.
pub fn aggregate<'a, I>(results: I, dataset: &Dataset) -> Result<StratifiedReport, ReportError>
where
    I: IntoIterator<Item = (&'a str, &'a ScoreResult)>,
{
    let index = dataset.index();
    let mut seen = BTreeSet::new();
    let mut report = StratifiedReport::default();
    for (id, result) in results {
        let passage = index
            .get(id)
            .ok_or_else(|| ReportError::UnknownId(id.to_string()))?;
        if !seen.insert(id) {
            return Err(ReportError::DuplicateId(id.to_string()));
        }
        let m = &passage.metadata;
        report.overall.add(result);
        report
            .by_coref_type
            .entry(m.coref_type)
            .or_default()
            .add(result);
        report
            .by_pronoun_category
            .entry(m.pronoun_category)
            .or_default()
            .add(result);
        report
            .by_pronoun_and_coref
            .entry(m.pronoun_category)
            .or_default()
            .entry(m.coref_type)
            .or_default()
            .add(result);
        report
            .by_distance
            .entry(bucket_distance(m))
            .or_default()
            .add(result);
        report
            .by_subcorpus
            .entry(m.subcorpus)
            .or_default()
            .add(result);
    }
    Ok(report)
}

#[cfg(test)]
mod tests;
