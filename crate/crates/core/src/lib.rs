//! Core toolkit for Czech pronominal anaphora resolution experiments.
//!
//! The crate covers the whole offline side of the pipeline:
//!
//! * [`corpus`]: passage records, the `<ana>`/`<ant>` tag format, dataset
//!   loading/validation and fine-tuning pair export.
//! * [`scorer`]: the relaxed span-level accuracy metric (root inclusion,
//!   containment within the gold subtree, contiguity) with failure reasons.
//! * [`baseline`]: CoNLL-U ingestion and the closest-agreeing-noun baseline.
//! * [`prompt`]: Yes/No, question-answering and tagging prompt templates with
//!   few-shot exemplar assembly.
//! * [`response`]: normalisation of raw model output into scorable form.
//! * [`report`]: stratified accuracy tables (JSON, CSV, Markdown).
//!
//! All character offsets are counted in Unicode scalar values, never bytes.

pub mod baseline;
pub mod corpus;
pub mod prompt;
pub mod report;
pub mod response;
pub mod scorer;
pub mod text;

pub use corpus::{
    AnaphoraMetadata, CorefType, Dataset, Passage, PronounCategory, Span, Split, Subcorpus,
};
pub use scorer::{FailureReason, ScoreResult, Tokenization, Verdict};
