use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    score_answer_string, score_segments, score_tagged_sentence, ScoreError, ScoreResult,
    Tokenization,
};
use crate::corpus::{Passage, Span};

/// What a system predicted for one passage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictionPayload {
    /// Surface string of the antecedent.
    Answer(String),
    /// The passage re-emitted with `<ant>` (and `<ana>`) tags.
    Tagged(String),
    /// Character segments over the passage text; empty means abstention.
    Segments(Vec<Span>),
}

/// One line of a predictions file: `id` plus exactly one of `answer`,
/// `tagged` or `span`. `span` is `{start, end}`, a list of such objects, or
/// `null` for an abstention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub id: String,
    pub payload: PredictionPayload,
}

impl Prediction {
    pub fn answer(id: impl Into<String>, answer: impl Into<String>) -> Self {
        Prediction {
            id: id.into(),
            payload: PredictionPayload::Answer(answer.into()),
        }
    }

    pub fn tagged(id: impl Into<String>, tagged: impl Into<String>) -> Self {
        Prediction {
            id: id.into(),
            payload: PredictionPayload::Tagged(tagged.into()),
        }
    }

    pub fn span(id: impl Into<String>, span: Option<Span>) -> Self {
        Prediction {
            id: id.into(),
            payload: PredictionPayload::Segments(span.into_iter().collect()),
        }
    }
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum SpanField {
    One(Span),
    Many(Vec<Span>),
}

#[derive(Deserialize)]
struct RawPrediction {
    id: String,
    #[serde(default)]
    answer: Option<String>,
    #[serde(default)]
    tagged: Option<String>,
    #[serde(default, deserialize_with = "present")]
    span: Option<Option<SpanField>>,
}

// Distinguishes `"span": null` (Some(None)) from an absent key (None).
fn present<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<SpanField>>, D::Error> {
    Option::<SpanField>::deserialize(d).map(Some)
}

impl<'de> Deserialize<'de> for Prediction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawPrediction::deserialize(d)?;
        let payload = match (raw.answer, raw.tagged, raw.span) {
            (Some(a), None, None) => PredictionPayload::Answer(a),
            (None, Some(t), None) => PredictionPayload::Tagged(t),
            (None, None, Some(s)) => PredictionPayload::Segments(match s {
                None => Vec::new(),
                Some(SpanField::One(s)) => vec![s],
                Some(SpanField::Many(v)) => v,
            }),
            _ => {
                return Err(serde::de::Error::custom(
                    "prediction needs exactly one of `answer`, `tagged`, `span`",
                ))
            }
        };
        Ok(Prediction {
            id: raw.id,
            payload,
        })
    }
}

impl Serialize for Prediction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("id", &self.id)?;
        match &self.payload {
            PredictionPayload::Answer(a) => map.serialize_entry("answer", a)?,
            PredictionPayload::Tagged(t) => map.serialize_entry("tagged", t)?,
            PredictionPayload::Segments(v) => match v.as_slice() {
                [] => map.serialize_entry("span", &None::<Span>)?,
                [one] => map.serialize_entry("span", one)?,
                many => map.serialize_entry("span", many)?,
            },
        }
        map.end()
    }
}

/// Scores any prediction payload against its passage.
pub fn score_prediction(
    payload: &PredictionPayload,
    passage: &Passage,
    tokens: &Tokenization,
) -> Result<ScoreResult, ScoreError> {
    match payload {
        PredictionPayload::Answer(a) => Ok(score_answer_string(a, passage, tokens)),
        PredictionPayload::Tagged(t) => Ok(score_tagged_sentence(t, passage, tokens)),
        PredictionPayload::Segments(v) => score_segments(
            v,
            passage.antecedent_root,
            passage.antecedent_subtree,
            tokens,
        ),
    }
}
