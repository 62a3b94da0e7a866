use crate::corpus::Span;

/// Token spans over one passage text: maximal runs of word characters, with
/// every other non-whitespace character as a token of its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenization {
    text_len: usize,
    token_spans: Vec<Span>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_') || is_combining_mark(c)
}

// Combining diacritics (decomposed Czech text) stay attached to their base.
fn is_combining_mark(c: char) -> bool {
    matches!(c as u32, 0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

pub fn tokenize(text: &str) -> Tokenization {
    let mut token_spans = Vec::new();
    let mut word_start: Option<usize> = None;
    let mut len = 0;
    for (i, c) in text.chars().enumerate() {
        len = i + 1;
        if is_word_char(c) {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = word_start.take() {
            token_spans.push(Span { start: s, end: i });
        }
        if !c.is_whitespace() {
            token_spans.push(Span {
                start: i,
                end: i + 1,
            });
        }
    }
    if let Some(s) = word_start {
        token_spans.push(Span { start: s, end: len });
    }
    Tokenization {
        text_len: len,
        token_spans,
    }
}

impl Tokenization {
    pub fn text_len(&self) -> usize {
        self.text_len
    }

    pub fn spans(&self) -> &[Span] {
        &self.token_spans
    }

    pub fn len(&self) -> usize {
        self.token_spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_spans.is_empty()
    }

    /// Index range of tokens overlapping `span`.
    pub fn covering(&self, span: Span) -> std::ops::Range<usize> {
        let first = self.token_spans.partition_point(|t| t.end <= span.start);
        let last = self.token_spans.partition_point(|t| t.start < span.end);
        first..last.max(first)
    }

    /// Expands `span` outward to the boundaries of the tokens it overlaps.
    /// `None` when it overlaps no token (whitespace only).
    pub fn snap(&self, span: Span) -> Option<Span> {
        let r = self.covering(span);
        if r.is_empty() {
            return None;
        }
        Some(Span {
            start: self.token_spans[r.start].start,
            end: self.token_spans[r.end - 1].end,
        })
    }

    /// Whether any token starts within `[from, to)`.
    pub fn has_token_between(&self, from: usize, to: usize) -> bool {
        !self
            .covering(Span {
                start: from,
                end: to,
            })
            .is_empty()
    }
}
