//! Minimal CoNLL-U reader: ten tab-separated columns, comment lines,
//! multiword-token ranges, empty nodes (skipped).

use std::io::BufRead;

use thiserror::Error;

use super::Features;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluWord {
    /// 1-based word index within the sentence.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub feats: Features,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
}

/// A surface token spanning several syntactic words, e.g. `naň` = `na` + `něj`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiwordToken {
    pub first: usize,
    pub last: usize,
    pub form: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConlluSentence {
    /// `(key, value)` for `# key = value` comments; `value` is `None` for bare
    /// comments such as `# newpar`.
    pub comments: Vec<(String, Option<String>)>,
    pub words: Vec<ConlluWord>,
    pub multiword: Vec<MultiwordToken>,
}

impl ConlluSentence {
    pub fn comment(&self, key: &str) -> Option<&str> {
        self.comments
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.as_deref())
    }

    pub fn has_comment(&self, key: &str) -> bool {
        self.comments.iter().any(|(k, _)| k == key)
    }
}

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

fn malformed(line: usize, reason: impl Into<String>) -> ConlluError {
    ConlluError::Malformed {
        line,
        reason: reason.into(),
    }
}

fn parse_comment(body: &str) -> (String, Option<String>) {
    let body = body.trim();
    // `# newdoc id = X` is keyed as "newdoc id".
    match body.split_once('=') {
        Some((k, v)) => (k.trim().to_string(), Some(v.trim().to_string())),
        None => (body.to_string(), None),
    }
}

pub fn read_conllu<R: BufRead>(reader: R) -> Result<Vec<ConlluSentence>, ConlluError> {
    let mut sentences = Vec::new();
    let mut current = ConlluSentence::default();
    let flush = |current: &mut ConlluSentence, out: &mut Vec<ConlluSentence>| {
        if !current.words.is_empty() || !current.comments.is_empty() {
            out.push(std::mem::take(current));
        }
    };
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            flush(&mut current, &mut sentences);
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            if !current.words.is_empty() {
                // Comment after words without a blank separator starts a new sentence.
                flush(&mut current, &mut sentences);
            }
            current.comments.push(parse_comment(body));
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(malformed(
                line_no,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        let id = cols[0];
        if id.contains('.') {
            continue; // empty node
        }
        if let Some((a, b)) = id.split_once('-') {
            let first = a
                .parse()
                .map_err(|_| malformed(line_no, format!("bad range id {id:?}")))?;
            let last = b
                .parse()
                .map_err(|_| malformed(line_no, format!("bad range id {id:?}")))?;
            if first > last {
                return Err(malformed(line_no, format!("bad range id {id:?}")));
            }
            current.multiword.push(MultiwordToken {
                first,
                last,
                form: cols[1].to_string(),
            });
            continue;
        }
        let id: usize = id
            .parse()
            .map_err(|_| malformed(line_no, format!("non-integer id {id:?}")))?;
        if id != current.words.len() + 1 {
            return Err(malformed(line_no, format!("word id {id} out of sequence")));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| malformed(line_no, format!("non-integer head {:?}", cols[6])))?;
        let feats = cols[5]
            .parse::<Features>()
            .map_err(|e| malformed(line_no, e))?;
        current.words.push(ConlluWord {
            id,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            feats,
            head,
            deprel: cols[7].to_string(),
        });
    }
    flush(&mut current, &mut sentences);

    for s in &sentences {
        let n = s.words.len();
        if let Some(w) = s.words.iter().find(|w| w.head > n) {
            return Err(ConlluError::Malformed {
                line: 0,
                reason: format!(
                    "word {} has head {} beyond sentence length {n}",
                    w.id, w.head
                ),
            });
        }
        if let Some(m) = s.multiword.iter().find(|m| m.last > n) {
            return Err(ConlluError::Malformed {
                line: 0,
                reason: format!(
                    "multiword range {}-{} beyond sentence length {n}",
                    m.first, m.last
                ),
            });
        }
    }
    Ok(sentences)
}
