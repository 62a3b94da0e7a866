//! Prompt rendering for the three prompting strategies.
//!
//! Question-answering and tagging prompts share one layout:
//!
//! ```text
//! INSTRUCTIONS: ...
//!
//! SENTENCE: "<exemplar sentence>"
//! QUESTION: ...
//! ANSWER: [<gold answer>]
//!
//! SENTENCE: "<query sentence>"
//! QUESTION: ...
//! ANSWER:
//! ```
//!
//! with zero, one or three answered exemplar blocks.

mod exemplars;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Passage, UnknownValue};

pub use exemplars::{make_yesno_pairs, select_exemplars, ExemplarError, YesNoItem, YesNoPairs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    YesNo,
    QuestionAnswering,
    Tagging,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::YesNo,
        Strategy::QuestionAnswering,
        Strategy::Tagging,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::YesNo => "yes_no",
            Strategy::QuestionAnswering => "question_answering",
            Strategy::Tagging => "tagging",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "yes_no" | "yesno" => Ok(Strategy::YesNo),
            "question_answering" | "qa" => Ok(Strategy::QuestionAnswering),
            "tagging" | "tag" => Ok(Strategy::Tagging),
            _ => Err(UnknownValue {
                kind: "strategy",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Yes,
    No,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Yes => "YES",
            Label::No => "NO",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fully rendered prompt for one passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub strategy: Strategy,
    pub shots: usize,
    pub rendered: String,
    pub passage_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_label: Option<Label>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exemplar_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("yes/no prompts need a candidate antecedent")]
    CandidateMissing,
    #[error("{strategy} prompts cannot take {shots} exemplars")]
    BadShotCount { strategy: Strategy, shots: usize },
    #[error("passage {0} cannot be its own exemplar")]
    ExemplarIsQuery(String),
    #[error("exemplar {0} comes from the same split as the query passage")]
    ExemplarSameSplit(String),
}

pub const SHOT_COUNTS: [usize; 3] = [0, 1, 3];

const QA_INSTRUCTIONS: &str = "You are an anaphora resolution system. You are given a sentence in which a word is marked with <ana></ana> tags. Your task is to identify which passage of the sentence the mention marked in <ana></ana> refers to. Answer in format [X] where X is the passage of the sentence that the marked mention refers to. Do not change the grammatical form of this passage. Do not include anything else in your answer.";

const TAG_INSTRUCTIONS: &str = "You are an anaphora resolution system. You are given a sentence in which a word is marked with <ana></ana> tags. Your task is to identify which passage of the sentence the mention marked in <ana></ana> refers to. Add <ant></ant> tags to the sentence around the part of the sentence that the mention marked in <ana></ana> refers to. Answer in format [X] where X is the original sentence with the <ant></ant> tags added. Do not include anything else in your answer.";

fn yes_no_prompt(sentence_ana: &str, anaphora: &str, candidate: &str) -> String {
    format!(
        "You are an anaphora resolution system. In the following sentence: \"{sentence_ana}\" does \"{anaphora}\" refer to \"{candidate}\" ? Respond only YES or NO. Do not include anything else in your response."
    )
}

fn question_block(p: &Passage) -> String {
    format!(
        "SENTENCE: \"{}\"\nQUESTION: Which passage of the sentence does <ana>{}</ana> refer to? Answer in the format as instructed\nANSWER: ",
        p.sentence_ana(),
        p.anaphor_surface
    )
}

/// The gold answer text for an exemplar, without brackets.
pub fn gold_answer(strategy: Strategy, p: &Passage) -> String {
    match strategy {
        Strategy::YesNo => Label::Yes.to_string(),
        Strategy::QuestionAnswering => p.subtree_text().to_string(),
        Strategy::Tagging => p.sentence_ant_ana(),
    }
}

/// Renders one prompt. Yes/No takes a candidate and no exemplars; the other
/// strategies take 0, 1 or 3 exemplars from another split.
pub fn render(
    strategy: Strategy,
    passage: &Passage,
    exemplars: &[&Passage],
    candidate: Option<&str>,
) -> Result<PromptInstance, PromptError> {
    let shots = exemplars.len();
    let allowed = match strategy {
        Strategy::YesNo => shots == 0,
        _ => SHOT_COUNTS.contains(&shots),
    };
    if !allowed {
        return Err(PromptError::BadShotCount { strategy, shots });
    }
    for e in exemplars {
        if e.id == passage.id {
            return Err(PromptError::ExemplarIsQuery(e.id.clone()));
        }
        if e.metadata.split == passage.metadata.split {
            return Err(PromptError::ExemplarSameSplit(e.id.clone()));
        }
    }

    let mut instance = PromptInstance {
        strategy,
        shots,
        rendered: String::new(),
        passage_id: passage.id.clone(),
        candidate: None,
        expected_label: None,
        exemplar_ids: exemplars.iter().map(|e| e.id.clone()).collect(),
    };
    match strategy {
        Strategy::YesNo => {
            let candidate = candidate.ok_or(PromptError::CandidateMissing)?;
            instance.rendered =
                yes_no_prompt(&passage.sentence_ana(), &passage.anaphor_surface, candidate);
            instance.candidate = Some(candidate.to_string());
            instance.expected_label = Some(if candidate == passage.subtree_text() {
                Label::Yes
            } else {
                Label::No
            });
        }
        Strategy::QuestionAnswering | Strategy::Tagging => {
            let instructions = if strategy == Strategy::Tagging {
                TAG_INSTRUCTIONS
            } else {
                QA_INSTRUCTIONS
            };
            let mut out = format!("INSTRUCTIONS: {instructions}\n\n");
            for e in exemplars {
                out.push_str(&question_block(e));
                out.push('[');
                out.push_str(&gold_answer(strategy, e));
                out.push_str("]\n\n");
            }
            out.push_str(&question_block(passage));
            instance.rendered = out;
        }
    }
    Ok(instance)
}

/// Renders a Yes/No prompt whose expected label is fixed by the caller
/// rather than inferred from the candidate text.
pub fn render_yes_no(
    passage: &Passage,
    candidate: &str,
    expected: Label,
) -> Result<PromptInstance, PromptError> {
    let mut instance = render(Strategy::YesNo, passage, &[], Some(candidate))?;
    instance.expected_label = Some(expected);
    Ok(instance)
}
