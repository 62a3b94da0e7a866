//! Turns raw model output into something the scorer understands.
//!
//! Every parser is total. In lenient mode (the default) a successful parse is
//! idempotent: parsing its payload again gives the same payload.

use serde::{Deserialize, Serialize};

use crate::corpus::Passage;
use crate::prompt::{Label, Strategy};
use crate::scorer::{
    score_answer_string, score_tagged_sentence, FailureReason, ScoreResult, Tokenization,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Yes,
    No,
    AnswerString,
    TaggedSentence,
    FormatError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub kind: ResponseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl ParsedResponse {
    fn format_error() -> Self {
        ParsedResponse {
            kind: ResponseKind::FormatError,
            payload: None,
        }
    }

    fn with(kind: ResponseKind, payload: impl Into<String>) -> Self {
        ParsedResponse {
            kind,
            payload: Some(payload.into()),
        }
    }

    pub fn is_format_error(&self) -> bool {
        self.kind == ResponseKind::FormatError
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leniency {
    /// Trim, tolerate punctuation and case, accept unbracketed answers.
    #[default]
    Lenient,
    /// Exactly `YES`/`NO`, answers must be bracketed.
    Strict,
}

pub fn parse_yesno(raw: &str) -> ParsedResponse {
    parse_yesno_with(raw, Leniency::Lenient)
}

pub fn parse_yesno_with(raw: &str, mode: Leniency) -> ParsedResponse {
    let word = match mode {
        Leniency::Strict => raw.to_string(),
        Leniency::Lenient => raw
            .split_whitespace()
            .next()
            .unwrap_or("")
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_uppercase(),
    };
    match word.as_str() {
        "YES" => ParsedResponse::with(ResponseKind::Yes, "YES"),
        "NO" => ParsedResponse::with(ResponseKind::No, "NO"),
        _ => ParsedResponse::format_error(),
    }
}

/// Content of the first `[...]` pair to close, i.e. the innermost pair
/// around the first `]` that has an opening bracket before it.
fn first_bracketed(raw: &str) -> Option<&str> {
    let mut open = None;
    for (i, c) in raw.char_indices() {
        match c {
            '[' => open = Some(i),
            ']' => {
                if let Some(o) = open {
                    return Some(&raw[o + 1..i]);
                }
            }
            _ => {}
        }
    }
    None
}

pub fn parse_bracketed(raw: &str) -> ParsedResponse {
    parse_bracketed_with(raw, Leniency::Lenient)
}

pub fn parse_bracketed_with(raw: &str, mode: Leniency) -> ParsedResponse {
    let content = match (first_bracketed(raw), mode) {
        (Some(inner), _) => inner.trim(),
        (None, Leniency::Lenient) => raw.trim(),
        (None, Leniency::Strict) => return ParsedResponse::format_error(),
    };
    if content.is_empty() {
        ParsedResponse::format_error()
    } else {
        ParsedResponse::with(ResponseKind::AnswerString, content)
    }
}

fn strip_enclosing(mut s: &str) -> &str {
    s = s.trim();
    while let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        s = inner.trim();
    }
    s
}

pub fn parse_tagged_response(raw: &str) -> ParsedResponse {
    parse_tagged_response_with(raw, Leniency::Lenient)
}

pub fn parse_tagged_response_with(raw: &str, mode: Leniency) -> ParsedResponse {
    let trimmed = raw.trim();
    if mode == Leniency::Strict && !(trimmed.starts_with('[') && trimmed.ends_with(']')) {
        return ParsedResponse::format_error();
    }
    let body = strip_enclosing(trimmed);
    let opens = body.matches("<ant>").count();
    let closes = body.matches("</ant>").count();
    let ordered = match (body.find("<ant>"), body.find("</ant>")) {
        (Some(o), Some(c)) => o < c,
        _ => false,
    };
    if opens == 1 && closes == 1 && ordered {
        ParsedResponse::with(ResponseKind::TaggedSentence, body)
    } else {
        ParsedResponse::format_error()
    }
}

/// Parses a raw response with the parser that belongs to `strategy`.
pub fn parse_response(strategy: Strategy, raw: &str, mode: Leniency) -> ParsedResponse {
    match strategy {
        Strategy::YesNo => parse_yesno_with(raw, mode),
        Strategy::QuestionAnswering => parse_bracketed_with(raw, mode),
        Strategy::Tagging => parse_tagged_response_with(raw, mode),
    }
}

/// Scores one response end to end. `raw = None` (the request failed) and
/// blank responses are `no_prediction`; unparseable ones are `format_error`.
/// Yes/No responses are judged against `expected`.
pub fn score_response(
    strategy: Strategy,
    raw: Option<&str>,
    mode: Leniency,
    passage: &Passage,
    tokens: &Tokenization,
    expected: Option<Label>,
) -> ScoreResult {
    let parsed = raw
        .filter(|r| !r.trim().is_empty())
        .map(|r| parse_response(strategy, r, mode));
    score_parsed(parsed.as_ref(), passage, tokens, expected)
}

/// Scores an already parsed response; `None` means there was no response.
pub fn score_parsed(
    parsed: Option<&ParsedResponse>,
    passage: &Passage,
    tokens: &Tokenization,
    expected: Option<Label>,
) -> ScoreResult {
    let Some(parsed) = parsed else {
        return ScoreResult::incorrect(FailureReason::NoPrediction);
    };
    let payload = parsed.payload.as_deref().unwrap_or("");
    match parsed.kind {
        ResponseKind::FormatError => ScoreResult::incorrect(FailureReason::FormatError),
        ResponseKind::Yes | ResponseKind::No => {
            let got = if parsed.kind == ResponseKind::Yes {
                Label::Yes
            } else {
                Label::No
            };
            if Some(got) == expected {
                ScoreResult::correct()
            } else {
                ScoreResult::incorrect(FailureReason::WrongLabel)
            }
        }
        ResponseKind::AnswerString => score_answer_string(payload, passage, tokens),
        ResponseKind::TaggedSentence => score_tagged_sentence(payload, passage, tokens),
    }
}
