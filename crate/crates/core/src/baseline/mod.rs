//! Rule-based antecedent baseline over externally produced UD parses.
//!
//! Every noun or proper noun ending before the anaphor is a candidate; its
//! phrase is the contiguous part of its dependency subtree that precedes the
//! anaphor, without the head's case-marking preposition and with punctuation
//! trimmed from the edges. Candidates are tried
//! nearest-first (token distance between candidate head and anaphor) and the
//! first one agreeing with the pronoun in gender and number wins.

mod conllu;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, Passage, Span};

pub use conllu::{read_conllu, ConlluError, ConlluSentence, ConlluWord, MultiwordToken};

/// UD morphological features; multi-valued features (`Gender=Fem,Neut`) are
/// kept as sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Features(BTreeMap<String, BTreeSet<String>>);

impl Features {
    pub fn get(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.0.get(key)
    }

    pub fn has(&self, key: &str, value: &str) -> bool {
        self.0.get(key).is_some_and(|v| v.contains(value))
    }

    pub fn insert(&mut self, key: &str, values: &[&str]) {
        self.0.insert(
            key.to_string(),
            values.iter().map(|v| v.to_string()).collect(),
        );
    }
}

impl FromStr for Features {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut map = BTreeMap::new();
        if s == "_" || s.is_empty() {
            return Ok(Features(map));
        }
        for item in s.split('|') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("bad feature {item:?}"))?;
            map.insert(
                k.to_string(),
                v.split(',').map(str::to_string).collect::<BTreeSet<_>>(),
            );
        }
        Ok(Features(map))
    }
}

impl fmt::Display for Features {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("_");
        }
        let items: Vec<String> = self
            .0
            .iter()
            .map(|(k, v)| format!("{k}={}", v.iter().cloned().collect::<Vec<_>>().join(",")))
            .collect();
        f.write_str(&items.join("|"))
    }
}

/// True iff `Gender` and `Number` are each compatible: a feature absent on
/// either side matches anything, otherwise the value sets must intersect.
pub fn agreement_match(pronoun: &Features, candidate: &Features) -> bool {
    ["Gender", "Number"]
        .iter()
        .all(|key| match (pronoun.get(key), candidate.get(key)) {
            (Some(a), Some(b)) => !a.is_disjoint(b),
            _ => true,
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub feats: Features,
    /// 1-based index of the head within the sentence, 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub char_span: Span,
}

/// Position of a token: sentence index and 0-based token index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenRef {
    pub sentence: usize,
    pub token: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedPassage {
    pub passage_id: String,
    pub sentences: Vec<Vec<ParsedToken>>,
    pub anaphor_token: TokenRef,
    pub anaphor_span: Span,
}

impl ParsedPassage {
    pub fn token(&self, r: TokenRef) -> &ParsedToken {
        &self.sentences[r.sentence][r.token]
    }

    /// Passage-wide token order.
    fn flat_index(&self, r: TokenRef) -> usize {
        self.sentences[..r.sentence]
            .iter()
            .map(Vec::len)
            .sum::<usize>()
            + r.token
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CoNLL-U: {0}")]
    MalformedConllu(ConlluError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("token {form:?} does not match passage text at character {at}")]
    Mismatch { form: String, at: usize },
    #[error("parser output ends before the passage text (at character {at})")]
    TextNotCovered { at: usize },
    #[error("no token overlaps the anaphor {0}")]
    AnaphorUnaligned(Span),
}

/// Passages that could not be used, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skipped {
    pub passage_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub parsed: Vec<ParsedPassage>,
    pub skipped: Vec<Skipped>,
}

/// How CoNLL-U sentences are grouped into passages.
///
/// Sentences following a `# passage_id = X` or `# newdoc id = X` comment
/// belong to passage `X`. Failing that, a `# sent_id` equal to a passage id
/// (optionally with a `/N`, `#N`, `-sN` or `.N` suffix) is used. With
/// `passage_order` set, the i-th `# newpar` paragraph maps to the i-th id,
/// matching the plain-text export of [`plain_text_for_parser`].
#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub passage_order: Option<Vec<String>>,
}

fn strip_sent_suffix(id: &str) -> &str {
    for sep in ['/', '#', '.'] {
        if let Some((head, tail)) = id.rsplit_once(sep) {
            if !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) {
                return head;
            }
        }
    }
    if let Some((head, tail)) = id.rsplit_once("-s") {
        if !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) {
            return head;
        }
    }
    id
}

fn group_sentences(
    sentences: Vec<ConlluSentence>,
    dataset: &Dataset,
    options: &IngestOptions,
) -> (Vec<(String, Vec<ConlluSentence>)>, Vec<Skipped>) {
    let index = dataset.index();
    let mut groups: Vec<(String, Vec<ConlluSentence>)> = Vec::new();
    let mut skipped = Vec::new();
    let mut current: Option<String> = None;
    let mut paragraph: Option<usize> = None;

    for s in sentences {
        let explicit = s
            .comment("passage_id")
            .or_else(|| s.comment("newdoc id"))
            .map(str::to_string);
        let new_par = s.comments.iter().any(|(k, _)| k.starts_with("newpar"));
        if new_par {
            paragraph = Some(paragraph.map_or(0, |p| p + 1));
        }
        let id = if let Some(id) = explicit {
            current = Some(id.clone());
            Some(id)
        } else if let Some(order) = &options.passage_order {
            if new_par {
                current = paragraph.and_then(|p| order.get(p)).cloned();
            }
            current.clone()
        } else if let Some(sid) = s
            .comment("sent_id")
            .filter(|sid| index.contains_key(*sid) || index.contains_key(strip_sent_suffix(sid)))
        {
            let id = if index.contains_key(sid) {
                sid.to_string()
            } else {
                strip_sent_suffix(sid).to_string()
            };
            current = Some(id.clone());
            Some(id)
        } else {
            current.clone()
        };
        if s.words.is_empty() {
            continue;
        }
        match id {
            Some(id) => match groups.last_mut() {
                Some((last, group)) if *last == id => group.push(s),
                _ => groups.push((id, vec![s])),
            },
            None => skipped.push(Skipped {
                passage_id: s.comment("sent_id").unwrap_or("?").to_string(),
                reason: "sentence cannot be mapped to a passage id".into(),
            }),
        }
    }
    (groups, skipped)
}

/// Reads a CoNLL-U file and aligns each parsed passage to its dataset record.
pub fn ingest_conllu(
    path: &Path,
    dataset: &Dataset,
    options: &IngestOptions,
) -> Result<IngestReport, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let sentences = read_conllu(BufReader::new(file)).map_err(|e| match e {
        ConlluError::Io(source) => IngestError::Io {
            path: path.display().to_string(),
            source,
        },
        other => IngestError::MalformedConllu(other),
    })?;
    Ok(ingest_sentences(sentences, dataset, options))
}

pub fn ingest_sentences(
    sentences: Vec<ConlluSentence>,
    dataset: &Dataset,
    options: &IngestOptions,
) -> IngestReport {
    let index = dataset.index();
    let (groups, mut skipped) = group_sentences(sentences, dataset, options);
    let mut parsed = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (id, group) in groups {
        let Some(passage) = index.get(id.as_str()) else {
            skipped.push(Skipped {
                passage_id: id,
                reason: "unknown passage id".into(),
            });
            continue;
        };
        if !seen.insert(id.clone()) {
            skipped.push(Skipped {
                passage_id: id,
                reason: "passage parsed more than once".into(),
            });
            continue;
        }
        match align_passage(passage, &group) {
            Ok(p) => parsed.push(p),
            Err(e) => skipped.push(Skipped {
                passage_id: id,
                reason: e.to_string(),
            }),
        }
    }
    IngestReport { parsed, skipped }
}

/// Walks `text` from `*pos`, matching the non-whitespace characters of
/// `form`; whitespace on either side is skipped.
fn align_form(text: &[char], pos: &mut usize, form: &str) -> Result<Span, AlignmentError> {
    while *pos < text.len() && text[*pos].is_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    let mut matched_any = false;
    for c in form.chars().filter(|c| !c.is_whitespace()) {
        while *pos < text.len() && text[*pos].is_whitespace() && matched_any {
            *pos += 1;
        }
        if *pos < text.len() && text[*pos] == c {
            *pos += 1;
            matched_any = true;
        } else {
            return Err(AlignmentError::Mismatch {
                form: form.to_string(),
                at: start,
            });
        }
    }
    if !matched_any {
        return Err(AlignmentError::Mismatch {
            form: form.to_string(),
            at: start,
        });
    }
    Ok(Span { start, end: *pos })
}

/// Aligns parsed sentences to the passage text by character offsets.
/// Multiword tokens align through their surface form; their syntactic words
/// share its span.
pub fn align_passage(
    passage: &Passage,
    sentences: &[ConlluSentence],
) -> Result<ParsedPassage, AlignmentError> {
    let text: Vec<char> = passage.text.chars().collect();
    let mut pos = 0;
    let mut out = Vec::with_capacity(sentences.len());
    for s in sentences {
        let mut spans = vec![None; s.words.len()];
        let mut w = 1;
        while w <= s.words.len() {
            if let Some(m) = s.multiword.iter().find(|m| m.first == w) {
                let span = align_form(&text, &mut pos, &m.form)?;
                for slot in &mut spans[m.first - 1..m.last] {
                    *slot = Some(span);
                }
                w = m.last + 1;
            } else {
                spans[w - 1] = Some(align_form(&text, &mut pos, &s.words[w - 1].form)?);
                w += 1;
            }
        }
        out.push(
            s.words
                .iter()
                .zip(spans)
                .map(|(word, span)| ParsedToken {
                    form: word.form.clone(),
                    lemma: word.lemma.clone(),
                    upos: word.upos.clone(),
                    feats: word.feats.clone(),
                    head: word.head,
                    deprel: word.deprel.clone(),
                    char_span: span.expect("every word aligned"),
                })
                .collect::<Vec<_>>(),
        );
    }
    if let Some(at) = (pos..text.len()).find(|&i| !text[i].is_whitespace()) {
        return Err(AlignmentError::TextNotCovered { at });
    }

    let overlapping: Vec<TokenRef> = out
        .iter()
        .enumerate()
        .flat_map(|(si, toks)| {
            toks.iter()
                .enumerate()
                .filter(|(_, t)| t.char_span.overlaps(&passage.anaphor))
                .map(move |(ti, _)| TokenRef {
                    sentence: si,
                    token: ti,
                })
        })
        .collect();
    let anaphor_token = overlapping
        .iter()
        .copied()
        .find(|r| matches!(out[r.sentence][r.token].upos.as_str(), "PRON" | "DET"))
        .or_else(|| overlapping.first().copied())
        .ok_or(AlignmentError::AnaphorUnaligned(passage.anaphor))?;

    Ok(ParsedPassage {
        passage_id: passage.id.clone(),
        sentences: out,
        anaphor_token,
        anaphor_span: passage.anaphor,
    })
}

/// One plain-text paragraph per passage (blank-line separated), for feeding
/// an external UD parser; returns the text and the passage id order.
pub fn plain_text_for_parser<'a>(
    passages: impl IntoIterator<Item = &'a Passage>,
) -> (String, Vec<String>) {
    let mut text = String::new();
    let mut ids = Vec::new();
    for p in passages {
        let flat: String = p.text.split_whitespace().collect::<Vec<_>>().join(" ");
        text.push_str(&flat);
        text.push_str("\n\n");
        ids.push(p.id.clone());
    }
    (text, ids)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidate {
    pub head: TokenRef,
    pub span: Span,
    /// Tokens between the candidate head and the anaphor.
    pub distance: usize,
}

/// Nominal candidates preceding the anaphor, nearest first.
pub fn extract_np_candidates(parsed: &ParsedPassage) -> Vec<Candidate> {
    let limit = parsed.anaphor_span.start;
    let anaphor_flat = parsed.flat_index(parsed.anaphor_token);
    let mut candidates = Vec::new();
    for (si, tokens) in parsed.sentences.iter().enumerate() {
        let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.head > 0 {
                children.entry(t.head - 1).or_default().push(i);
            }
        }
        for (ti, t) in tokens.iter().enumerate() {
            if !matches!(t.upos.as_str(), "NOUN" | "PROPN") || t.char_span.end > limit {
                continue;
            }
            let head = TokenRef {
                sentence: si,
                token: ti,
            };
            let flat = parsed.flat_index(head);
            if flat >= anaphor_flat {
                continue;
            }
            let Some(span) = subtree_span(tokens, &children, ti, limit) else {
                continue;
            };
            candidates.push(Candidate {
                head,
                span,
                distance: anaphor_flat - flat,
            });
        }
    }
    candidates.sort_by_key(|c| c.distance);
    candidates
}

fn subtree_span(
    tokens: &[ParsedToken],
    children: &HashMap<usize, Vec<usize>>,
    head: usize,
    limit: usize,
) -> Option<Span> {
    // Case-marking prepositions of the head belong to the PP, not the NP.
    let mut members = BTreeSet::new();
    let mut stack = vec![head];
    while let Some(i) = stack.pop() {
        if members.insert(i) {
            if let Some(kids) = children.get(&i) {
                stack.extend(kids.iter().copied().filter(|&k| {
                    !(i == head && tokens[k].deprel.split(':').next() == Some("case"))
                }));
            }
        }
    }
    let included = |i: usize| members.contains(&i) && tokens[i].char_span.end <= limit;
    let mut lo = head;
    while lo > 0 && included(lo - 1) {
        lo -= 1;
    }
    let mut hi = head;
    while hi + 1 < tokens.len() && included(hi + 1) {
        hi += 1;
    }
    while lo < head && tokens[lo].upos == "PUNCT" {
        lo += 1;
    }
    while hi > head && tokens[hi].upos == "PUNCT" {
        hi -= 1;
    }
    let span = Span {
        start: tokens[lo].char_span.start,
        end: tokens[hi].char_span.end,
    };
    (span.end <= limit).then_some(span)
}

/// What to do when no candidate agrees with the pronoun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fallback {
    /// Take the nearest candidate regardless of agreement.
    Nearest,
    /// Predict nothing.
    Abstain,
}

impl FromStr for Fallback {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(Fallback::Nearest),
            "abstain" => Ok(Fallback::Abstain),
            _ => Err(format!("unknown fallback mode {s:?} (nearest|abstain)")),
        }
    }
}

impl fmt::Display for Fallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fallback::Nearest => "nearest",
            Fallback::Abstain => "abstain",
        })
    }
}

/// The predicted antecedent span, or `None` to abstain.
pub fn resolve(parsed: &ParsedPassage, fallback: Fallback) -> Option<Span> {
    let candidates = extract_np_candidates(parsed);
    let pronoun = &parsed.token(parsed.anaphor_token).feats;
    candidates
        .iter()
        .find(|c| agreement_match(pronoun, &parsed.token(c.head).feats))
        .or(match fallback {
            Fallback::Nearest => candidates.first(),
            Fallback::Abstain => None,
        })
        .map(|c| c.span)
}
