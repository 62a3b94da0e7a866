//! Character-offset helpers shared by the corpus, scorer and baseline.

use crate::corpus::Span;

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte offset of the `char_idx`-th character (or `text.len()` at the end).
pub fn byte_offset(text: &str, char_idx: usize) -> usize {
    text.char_indices()
        .nth(char_idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

/// Slice `text` by a character span. The span must be in range.
pub fn char_slice(text: &str, span: Span) -> &str {
    let start = byte_offset(text, span.start);
    let end = start + byte_offset(&text[start..], span.end - span.start);
    &text[start..end]
}

/// Trim and collapse internal whitespace runs to a single ASCII space.
/// Case is preserved.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// All character spans in `text` matching `needle` where every whitespace run
/// in the needle matches one or more whitespace characters in the text.
/// The needle is whitespace-normalised first; an empty needle has no matches.
pub fn find_ws_insensitive(text: &str, needle: &str) -> Vec<Span> {
    let needle: Vec<char> = normalize_whitespace(needle).chars().collect();
    if needle.is_empty() {
        return Vec::new();
    }
    let hay: Vec<char> = text.chars().collect();
    let mut found = Vec::new();
    for start in 0..hay.len() {
        let mut i = start;
        let mut ok = true;
        for &c in &needle {
            if c == ' ' {
                if i >= hay.len() || !hay[i].is_whitespace() {
                    ok = false;
                    break;
                }
                while i < hay.len() && hay[i].is_whitespace() {
                    i += 1;
                }
            } else if i < hay.len() && hay[i] == c {
                i += 1;
            } else {
                ok = false;
                break;
            }
        }
        if ok {
            found.push(Span { start, end: i });
        }
    }
    found
}

/// Maps character offsets between two strings that are equal after
/// whitespace normalisation, by counting non-whitespace characters.
///
/// Returns `None` when the strings differ in their non-whitespace content or
/// when the span carries no non-whitespace character.
pub fn transfer_span(src: &str, dst: &str, span: Span) -> Option<Span> {
    let src_chars: Vec<char> = src.chars().collect();
    if span.end > src_chars.len() {
        return None;
    }
    let before = src_chars[..span.start]
        .iter()
        .filter(|c| !c.is_whitespace())
        .count();
    let inside = src_chars[span.start..span.end]
        .iter()
        .filter(|c| !c.is_whitespace())
        .count();
    if inside == 0 {
        return None;
    }
    let src_nonws: Vec<char> = src_chars
        .iter()
        .copied()
        .filter(|c| !c.is_whitespace())
        .collect();
    let dst_positions: Vec<(usize, char)> = dst
        .chars()
        .enumerate()
        .filter(|(_, c)| !c.is_whitespace())
        .collect();
    if src_nonws.len() != dst_positions.len()
        || src_nonws
            .iter()
            .zip(&dst_positions)
            .any(|(a, (_, b))| a != b)
    {
        return None;
    }
    let start = dst_positions[before].0;
    let end = dst_positions[before + inside - 1].0 + 1;
    Some(Span { start, end })
}
