//! Relaxed span-level accuracy.
//!
//! A predicted antecedent is correct when
//!
//! 1. it covers the gold antecedent root,
//! 2. snapped outward to token boundaries, it lies inside the gold antecedent
//!    subtree (also snapped), and
//! 3. it is one contiguous stretch of the passage.
//!
//! The first violated criterion, in that order, is reported as the failure.

mod prediction;
mod tokenize;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{parse_tagged_text, render_tagged_text, Passage, Span};
use crate::text::{find_ws_insensitive, normalize_whitespace, transfer_span};

pub use prediction::{score_prediction, Prediction, PredictionPayload};
pub use tokenize::{tokenize, Tokenization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    RootMissing,
    ContainmentViolated,
    Discontinuous,
    FormatError,
    NoPrediction,
    /// Yes/No classification answered with the wrong label.
    WrongLabel,
}

impl FailureReason {
    pub const ALL: [FailureReason; 6] = [
        FailureReason::RootMissing,
        FailureReason::ContainmentViolated,
        FailureReason::Discontinuous,
        FailureReason::FormatError,
        FailureReason::NoPrediction,
        FailureReason::WrongLabel,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FailureReason::RootMissing => "root_missing",
            FailureReason::ContainmentViolated => "containment_violated",
            FailureReason::Discontinuous => "discontinuous",
            FailureReason::FormatError => "format_error",
            FailureReason::NoPrediction => "no_prediction",
            FailureReason::WrongLabel => "wrong_label",
        }
    }
}

/// Verdict for one prediction. `failure` is present iff the verdict is
/// incorrect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawScoreResult")]
pub struct ScoreResult {
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<FailureReason>,
    /// The answer string occurred more than once in the passage.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguous: bool,
}

impl ScoreResult {
    pub fn correct() -> Self {
        ScoreResult {
            verdict: Verdict::Correct,
            failure: None,
            ambiguous: false,
        }
    }

    pub fn incorrect(reason: FailureReason) -> Self {
        ScoreResult {
            verdict: Verdict::Incorrect,
            failure: Some(reason),
            ambiguous: false,
        }
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn failure(&self) -> Option<FailureReason> {
        self.failure
    }

    pub fn is_correct(&self) -> bool {
        self.verdict == Verdict::Correct
    }

    fn with_ambiguity(mut self, ambiguous: bool) -> Self {
        self.ambiguous = ambiguous;
        self
    }
}

#[derive(Deserialize)]
struct RawScoreResult {
    verdict: Verdict,
    failure: Option<FailureReason>,
    #[serde(default)]
    ambiguous: bool,
}

impl TryFrom<RawScoreResult> for ScoreResult {
    type Error = String;

    fn try_from(raw: RawScoreResult) -> Result<Self, Self::Error> {
        match (raw.verdict, raw.failure) {
            (Verdict::Correct, None) | (Verdict::Incorrect, Some(_)) => Ok(ScoreResult {
                verdict: raw.verdict,
                failure: raw.failure,
                ambiguous: raw.ambiguous,
            }),
            _ => Err("verdict is correct iff failure is absent".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("span {span} out of range for text of length {len}")]
    SpanOutOfRange { span: Span, len: usize },
}

fn check_range(span: Span, tokens: &Tokenization) -> Result<(), ScoreError> {
    if span.is_valid_for(tokens.text_len()) {
        Ok(())
    } else {
        Err(ScoreError::SpanOutOfRange {
            span,
            len: tokens.text_len(),
        })
    }
}

/// Scores a single contiguous predicted span.
pub fn score_span(
    predicted: Span,
    gold_root: Span,
    gold_subtree: Span,
    tokens: &Tokenization,
) -> Result<ScoreResult, ScoreError> {
    score_segments(&[predicted], gold_root, gold_subtree, tokens)
}

/// Scores a prediction given as one or more character segments. An empty
/// segment list is no prediction; segments separated by anything other than
/// whitespace are discontinuous.
pub fn score_segments(
    predicted: &[Span],
    gold_root: Span,
    gold_subtree: Span,
    tokens: &Tokenization,
) -> Result<ScoreResult, ScoreError> {
    for span in predicted.iter().chain([&gold_root, &gold_subtree]) {
        check_range(*span, tokens)?;
    }
    if predicted.is_empty() {
        return Ok(ScoreResult::incorrect(FailureReason::NoPrediction));
    }
    let mut segments = predicted.to_vec();
    segments.sort();

    // Criterion 1: every character of the root is covered.
    let mut cursor = gold_root.start;
    for s in &segments {
        if s.start <= cursor && s.end > cursor {
            cursor = s.end;
        }
        if cursor >= gold_root.end {
            break;
        }
    }
    if cursor < gold_root.end {
        return Ok(ScoreResult::incorrect(FailureReason::RootMissing));
    }

    // Criterion 2: token-snapped containment.
    let gold = tokens.snap(gold_subtree);
    let contained = segments.iter().all(|s| match (tokens.snap(*s), gold) {
        (None, _) => true,
        (Some(p), Some(g)) => g.contains(&p),
        (Some(_), None) => false,
    });
    if !contained {
        return Ok(ScoreResult::incorrect(FailureReason::ContainmentViolated));
    }

    // Criterion 3: no non-whitespace gap between segments.
    let mut reach = segments[0].end;
    for s in &segments[1..] {
        if s.start > reach && tokens.has_token_between(reach, s.start) {
            return Ok(ScoreResult::incorrect(FailureReason::Discontinuous));
        }
        reach = reach.max(s.end);
    }
    Ok(ScoreResult::correct())
}

/// Scores a surface answer string (already stripped of answer brackets)
/// against every place it occurs in the passage. Any valid occurrence earns
/// credit.
pub fn score_answer_string(answer: &str, passage: &Passage, tokens: &Tokenization) -> ScoreResult {
    let answer = normalize_whitespace(answer);
    if answer.is_empty() {
        return ScoreResult::incorrect(FailureReason::NoPrediction);
    }
    let hits = find_ws_insensitive(&passage.text, &answer);
    if hits.is_empty() {
        return ScoreResult::incorrect(FailureReason::FormatError);
    }
    let ambiguous = hits.len() > 1;
    let mut first_failure = None;
    for hit in hits {
        match score_span(
            hit,
            passage.antecedent_root,
            passage.antecedent_subtree,
            tokens,
        ) {
            Ok(r) if r.is_correct() => return r.with_ambiguity(ambiguous),
            Ok(r) => {
                first_failure.get_or_insert(r);
            }
            Err(_) => {
                first_failure.get_or_insert(ScoreResult::incorrect(FailureReason::FormatError));
            }
        }
    }
    first_failure
        .expect("at least one occurrence")
        .with_ambiguity(ambiguous)
}

/// Scores a model-produced copy of the passage carrying `<ant>` tags. The
/// sentence itself must be unchanged apart from whitespace.
pub fn score_tagged_sentence(
    predicted_tagged: &str,
    passage: &Passage,
    tokens: &Tokenization,
) -> ScoreResult {
    if predicted_tagged.trim().is_empty() {
        return ScoreResult::incorrect(FailureReason::NoPrediction);
    }
    let parsed = match parse_tagged_text(predicted_tagged) {
        Ok(p) => p,
        Err(_) => return ScoreResult::incorrect(FailureReason::FormatError),
    };
    let Some(ant) = parsed.ant else {
        return ScoreResult::incorrect(FailureReason::FormatError);
    };
    let Ok(stripped) = render_tagged_text(&parsed.plain, parsed.ana, None) else {
        return ScoreResult::incorrect(FailureReason::FormatError);
    };
    if normalize_whitespace(&stripped) != normalize_whitespace(&passage.sentence_ana()) {
        return ScoreResult::incorrect(FailureReason::FormatError);
    }
    let Some(span) = transfer_span(&parsed.plain, &passage.text, ant) else {
        return ScoreResult::incorrect(FailureReason::NoPrediction);
    };
    score_span(
        span,
        passage.antecedent_root,
        passage.antecedent_subtree,
        tokens,
    )
    .unwrap_or(ScoreResult::incorrect(FailureReason::FormatError))
}
