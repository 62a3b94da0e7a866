//! Passage records and datasets.
//!
//! A passage is up to three sentences of Czech text holding exactly one
//! pronominal anaphor and one antecedent. The antecedent is described by two
//! spans: the full subtree phrase and its syntactic root token. Everything is
//! addressed by character offsets into the tag-free passage text.

mod export;
mod load;
mod tags;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{char_len, char_slice};

pub use export::{export_finetune_pairs, FinetunePair};
pub use load::{
    load_dataset, load_splits, AliasTable, DatasetFormat, LoadError, LoadOptions, LoadReport,
    Rejection, RejectionKind,
};
pub use tags::{parse_tagged_text, render_tagged_text, TagError, TaggedText};

/// Half-open character interval `[start, end)` over a passage's plain text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid span {start}..{end} for text of length {len}")]
pub struct InvalidSpan {
    pub start: usize,
    pub end: usize,
    pub len: usize,
}

impl Span {
    /// Builds a span checked against the length (in chars) of its owning text.
    pub fn new(start: usize, end: usize, text_len: usize) -> Result<Self, InvalidSpan> {
        if start < end && end <= text_len {
            Ok(Span { start, end })
        } else {
            Err(InvalidSpan {
                start,
                end,
                len: text_len,
            })
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn is_valid_for(&self, text_len: usize) -> bool {
        self.start < self.end && self.end <= text_len
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognised {kind} value {value:?}")]
pub struct UnknownValue {
    pub kind: &'static str,
    pub value: String,
}

fn unknown(kind: &'static str, value: &str) -> UnknownValue {
    UnknownValue {
        kind,
        value: value.to_string(),
    }
}

/// Grammatical coreference is resolvable by syntax alone (e.g. relative
/// pronouns); textual coreference needs discourse context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorefType {
    Grammatical,
    Textual,
}

impl CorefType {
    pub const ALL: [CorefType; 2] = [CorefType::Grammatical, CorefType::Textual];

    pub fn as_str(&self) -> &'static str {
        match self {
            CorefType::Grammatical => "grammatical",
            CorefType::Textual => "textual",
        }
    }

    pub fn title(&self) -> &'static str {
        match self {
            CorefType::Grammatical => "Grammatical",
            CorefType::Textual => "Textual",
        }
    }
}

impl FromStr for CorefType {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grammatical" | "gram" | "grammatical_coreference" => Ok(CorefType::Grammatical),
            "textual" | "text" | "textual_coreference" => Ok(CorefType::Textual),
            _ => Err(unknown("coref_type", s)),
        }
    }
}

/// Morphosyntactic category of the referring pronoun, in the treebank tagset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PronounCategory {
    #[serde(rename = "n.pron.indef")]
    Indefinite,
    #[serde(rename = "n.pron.def.pers")]
    DefinitePersonal,
    #[serde(rename = "n.pron.def.demon")]
    DefiniteDemonstrative,
}

impl PronounCategory {
    pub const ALL: [PronounCategory; 3] = [
        PronounCategory::Indefinite,
        PronounCategory::DefinitePersonal,
        PronounCategory::DefiniteDemonstrative,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PronounCategory::Indefinite => "n.pron.indef",
            PronounCategory::DefinitePersonal => "n.pron.def.pers",
            PronounCategory::DefiniteDemonstrative => "n.pron.def.demon",
        }
    }
}

impl FromStr for PronounCategory {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "n.pron.indef" | "indef" | "indefinite" => Ok(PronounCategory::Indefinite),
            "n.pron.def.pers" | "def.pers" | "personal" => Ok(PronounCategory::DefinitePersonal),
            "n.pron.def.demon" | "def.demon" | "demonstrative" => {
                Ok(PronounCategory::DefiniteDemonstrative)
            }
            _ => Err(unknown("pronoun_category", s)),
        }
    }
}

/// Source treebank of a passage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subcorpus {
    #[serde(rename = "PDT 3.5")]
    Pdt,
    #[serde(rename = "PCEDT 2.0")]
    Pcedt,
    #[serde(rename = "PDTSC 2.0")]
    Pdtsc,
}

impl Subcorpus {
    pub const ALL: [Subcorpus; 3] = [Subcorpus::Pdt, Subcorpus::Pcedt, Subcorpus::Pdtsc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Subcorpus::Pdt => "PDT 3.5",
            Subcorpus::Pcedt => "PCEDT 2.0",
            Subcorpus::Pdtsc => "PDTSC 2.0",
        }
    }

    pub fn description(&self) -> &'static str {
        match self {
            Subcorpus::Pdt => "original Czech",
            Subcorpus::Pcedt => "English translated",
            Subcorpus::Pdtsc => "Spoken Czech",
        }
    }
}

impl FromStr for Subcorpus {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphabetic())
            .collect();
        match key.as_str() {
            "pdt" | "pdtc" => Ok(Subcorpus::Pdt),
            "pcedt" => Ok(Subcorpus::Pcedt),
            "pdtsc" => Ok(Subcorpus::Pdtsc),
            _ => Err(unknown("subcorpus", s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" | "training" => Ok(Split::Train),
            "validation" | "valid" | "val" | "dev" | "development" => Ok(Split::Validation),
            "test" | "testing" | "eval" => Ok(Split::Test),
            _ => Err(unknown("split", s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnaphoraMetadata {
    pub coref_type: CorefType,
    pub pronoun_category: PronounCategory,
    /// Token-level offset from anaphor to antecedent root as stored in the
    /// source data; negative values mark cataphora.
    pub distance: i64,
    pub anaphor_in_antecedent: bool,
    pub subcorpus: Subcorpus,
    pub split: Split,
}

/// One dataset record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    /// Tag-free passage text.
    pub text: String,
    pub anaphor: Span,
    pub anaphor_surface: String,
    pub antecedent_subtree: Span,
    pub antecedent_root: Span,
    pub metadata: AnaphoraMetadata,
    /// Sentence count as provided by the source record, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_count: Option<usize>,
    /// Word count as provided by the source record, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PassageError {
    #[error("{field} span {span} is out of range for text of length {len}")]
    SpanOutOfRange {
        field: &'static str,
        span: Span,
        len: usize,
    },
    #[error("anaphor text {found:?} does not match anaphor surface {expected:?}")]
    SurfaceMismatch { expected: String, found: String },
    #[error("antecedent root {root} lies outside antecedent subtree {subtree}")]
    RootOutsideSubtree { root: Span, subtree: Span },
    #[error("demonstrative pronoun passage is labelled grammatical")]
    GrammaticalDemonstrative,
    #[error(
        "anaphor {anaphor} is flagged as inside the antecedent but lies outside subtree {subtree}"
    )]
    AnaphorNotInAntecedent { anaphor: Span, subtree: Span },
    #[error("antecedent subtree {subtree} crosses the anaphor {anaphor}")]
    CrossingAnaphor { anaphor: Span, subtree: Span },
}

impl Passage {
    /// Checks every record-level invariant.
    pub fn validate(&self) -> Result<(), PassageError> {
        let len = char_len(&self.text);
        for (field, span) in [
            ("anaphor", self.anaphor),
            ("antecedent_subtree", self.antecedent_subtree),
            ("antecedent_root", self.antecedent_root),
        ] {
            if !span.is_valid_for(len) {
                return Err(PassageError::SpanOutOfRange { field, span, len });
            }
        }
        let found = char_slice(&self.text, self.anaphor);
        if found != self.anaphor_surface {
            return Err(PassageError::SurfaceMismatch {
                expected: self.anaphor_surface.clone(),
                found: found.to_string(),
            });
        }
        if !self.antecedent_subtree.contains(&self.antecedent_root) {
            return Err(PassageError::RootOutsideSubtree {
                root: self.antecedent_root,
                subtree: self.antecedent_subtree,
            });
        }
        if self.metadata.pronoun_category == PronounCategory::DefiniteDemonstrative
            && self.metadata.coref_type == CorefType::Grammatical
        {
            return Err(PassageError::GrammaticalDemonstrative);
        }
        if self.metadata.anaphor_in_antecedent && !self.antecedent_subtree.contains(&self.anaphor) {
            return Err(PassageError::AnaphorNotInAntecedent {
                anaphor: self.anaphor,
                subtree: self.antecedent_subtree,
            });
        }
        if self.antecedent_subtree.overlaps(&self.anaphor)
            && !self.antecedent_subtree.contains(&self.anaphor)
        {
            return Err(PassageError::CrossingAnaphor {
                anaphor: self.anaphor,
                subtree: self.antecedent_subtree,
            });
        }
        Ok(())
    }

    pub fn subtree_text(&self) -> &str {
        char_slice(&self.text, self.antecedent_subtree)
    }

    pub fn root_text(&self) -> &str {
        char_slice(&self.text, self.antecedent_root)
    }

    /// The passage with only the anaphor tagged.
    pub fn sentence_ana(&self) -> String {
        render_tagged_text(&self.text, Some(self.anaphor), None).expect("validated passage renders")
    }

    /// The passage with both anaphor and antecedent tagged.
    pub fn sentence_ant_ana(&self) -> String {
        render_tagged_text(
            &self.text,
            Some(self.anaphor),
            Some(self.antecedent_subtree),
        )
        .expect("validated passage renders")
    }

    /// Sentence count: the source value when present, otherwise a count of
    /// sentence-final punctuation runs (at least one for non-empty text).
    pub fn sentences(&self) -> usize {
        self.sentence_count
            .unwrap_or_else(|| count_sentences(&self.text))
    }

    /// Word count: the source value when present, otherwise whitespace
    /// separated chunks holding at least one alphanumeric character.
    pub fn words(&self) -> usize {
        self.word_count.unwrap_or_else(|| {
            self.text
                .split_whitespace()
                .filter(|w| w.chars().any(char::is_alphanumeric))
                .count()
        })
    }
}

fn count_sentences(text: &str) -> usize {
    let chars: Vec<char> = text.trim().chars().collect();
    if chars.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?' | '…') {
            while i < chars.len()
                && matches!(chars[i], '.' | '!' | '?' | '…' | '"' | '“' | '”' | ')')
            {
                i += 1;
            }
            if i == chars.len() || chars[i].is_whitespace() {
                count += 1;
            }
        } else {
            i += 1;
        }
    }
    let ends_terminated = matches!(
        chars
            .iter()
            .rev()
            .find(|c| !matches!(c, '"' | '“' | '”' | ')')),
        Some('.' | '!' | '?' | '…')
    );
    if !ends_terminated {
        count += 1;
    }
    count.max(1)
}

/// Passage, sentence and word tallies for one (split, coreference type) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub passages: usize,
    pub sentences: usize,
    pub words: usize,
}

/// Per-split, per-coreference-type tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts(pub BTreeMap<Split, BTreeMap<CorefType, Tally>>);

impl DatasetCounts {
    pub fn get(&self, split: Split, coref: CorefType) -> Tally {
        self.0
            .get(&split)
            .and_then(|m| m.get(&coref))
            .copied()
            .unwrap_or_default()
    }

    pub fn total_passages(&self) -> usize {
        self.0
            .values()
            .flat_map(|m| m.values())
            .map(|t| t.passages)
            .sum()
    }
}

/// Published passage counts (grammatical, textual) per split.
pub const PUBLISHED_PASSAGE_COUNTS: [(Split, usize, usize); 3] = [
    (Split::Train, 25951, 19009),
    (Split::Validation, 3244, 2376),
    (Split::Test, 3247, 2380),
];

/// Published sentence counts (grammatical, textual) per split.
pub const PUBLISHED_SENTENCE_COUNTS: [(Split, usize, usize); 3] = [
    (Split::Train, 34413, 30757),
    (Split::Validation, 4369, 3913),
    (Split::Test, 4351, 3837),
];

/// Published word counts (grammatical, textual) per split.
pub const PUBLISHED_WORD_COUNTS: [(Split, usize, usize); 3] = [
    (Split::Train, 750298, 601294),
    (Split::Validation, 93324, 74365),
    (Split::Test, 95363, 75385),
];

/// An ordered, immutable collection of validated passages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    passages: Vec<Passage>,
    counts: DatasetCounts,
}

impl Dataset {
    /// Builds a dataset, validating every passage.
    pub fn new(passages: Vec<Passage>) -> Result<Self, (String, PassageError)> {
        for p in &passages {
            p.validate().map_err(|e| (p.id.clone(), e))?;
        }
        let counts = Self::recount(&passages);
        Ok(Dataset { passages, counts })
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn counts(&self) -> &DatasetCounts {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Passage> {
        self.passages
            .iter()
            .filter(move |p| p.metadata.split == split)
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.passages.iter().find(|p| p.id == id)
    }

    /// Id to passage index map.
    pub fn index(&self) -> BTreeMap<&str, &Passage> {
        self.passages.iter().map(|p| (p.id.as_str(), p)).collect()
    }

    /// Concatenates two datasets, recomputing counts.
    pub fn merge(mut self, other: Dataset) -> Dataset {
        self.passages.extend(other.passages);
        self.counts = Self::recount(&self.passages);
        self
    }

    pub fn recount(passages: &[Passage]) -> DatasetCounts {
        let mut counts = DatasetCounts::default();
        for p in passages {
            let t = counts
                .0
                .entry(p.metadata.split)
                .or_default()
                .entry(p.metadata.coref_type)
                .or_default();
            t.passages += 1;
            t.sentences += p.sentences();
            t.words += p.words();
        }
        counts
    }

    /// True when the cached counts equal a recomputation from the passages.
    pub fn counts_consistent(&self) -> bool {
        Self::recount(&self.passages) == self.counts
    }
}
