//! The `<ana>…</ana>` / `<ant>…</ant>` inline tag format.
//!
//! A tagged string carries at most one anaphor pair and at most one
//! antecedent pair. The pairs may be disjoint or the anaphor may sit fully
//! inside the antecedent; any other overlap is malformed.

use thiserror::Error;

use super::Span;
use crate::text::char_len;

const ANA_OPEN: &str = "<ana>";
const ANA_CLOSE: &str = "</ana>";
const ANT_OPEN: &str = "<ant>";
const ANT_CLOSE: &str = "</ant>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagError {
    #[error("unbalanced <{0}> tags")]
    UnbalancedTags(&'static str),
    #[error("duplicate <{0}> tag pair")]
    DuplicateTag(&'static str),
    #[error("<ana> and <ant> tags cross")]
    CrossingTags,
    #[error("<{0}> tag pair encloses no text")]
    EmptyTagContent(&'static str),
    #[error("span {span} is invalid for text of length {len}")]
    InvalidSpan { span: Span, len: usize },
    #[error("plain text already contains a tag literal")]
    TagLiteralInText,
}

/// Tag-free text plus the spans the tags addressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedText {
    pub plain: String,
    pub ana: Option<Span>,
    pub ant: Option<Span>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Ana,
    Ant,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Ana => "ana",
            Kind::Ant => "ant",
        }
    }
}

/// Strips the tags from `tagged` and returns character spans of their
/// contents in the stripped text.
pub fn parse_tagged_text(tagged: &str) -> Result<TaggedText, TagError> {
    let mut plain = String::with_capacity(tagged.len());
    let mut pos = 0usize; // chars emitted into `plain`
    let mut open: Vec<(Kind, usize)> = Vec::new();
    let mut ana: Option<Span> = None;
    let mut ant: Option<Span> = None;
    let mut seen_ana = false;
    let mut seen_ant = false;

    let mut rest = tagged;
    while !rest.is_empty() {
        let tag = [
            (ANA_OPEN, Kind::Ana, true),
            (ANA_CLOSE, Kind::Ana, false),
            (ANT_OPEN, Kind::Ant, true),
            (ANT_CLOSE, Kind::Ant, false),
        ]
        .into_iter()
        .find(|(lit, _, _)| rest.starts_with(lit));

        match tag {
            Some((lit, kind, true)) => {
                let seen = match kind {
                    Kind::Ana => &mut seen_ana,
                    Kind::Ant => &mut seen_ant,
                };
                if *seen {
                    return Err(TagError::DuplicateTag(kind.name()));
                }
                *seen = true;
                // The antecedent may not open while the anaphor is open.
                if kind == Kind::Ant && open.iter().any(|(k, _)| *k == Kind::Ana) {
                    return Err(TagError::CrossingTags);
                }
                open.push((kind, pos));
                rest = &rest[lit.len()..];
            }
            Some((lit, kind, false)) => {
                match open.last() {
                    Some((k, start)) if *k == kind => {
                        let start = *start;
                        open.pop();
                        if start == pos {
                            return Err(TagError::EmptyTagContent(kind.name()));
                        }
                        let span = Span { start, end: pos };
                        match kind {
                            Kind::Ana => ana = Some(span),
                            Kind::Ant => ant = Some(span),
                        }
                    }
                    Some(_) if open.iter().any(|(k, _)| *k == kind) => {
                        return Err(TagError::CrossingTags)
                    }
                    _ => {
                        // A close tag whose pair was already completed is a
                        // second pair missing its opener.
                        return Err(TagError::UnbalancedTags(kind.name()));
                    }
                }
                rest = &rest[lit.len()..];
            }
            None => {
                let c = rest.chars().next().expect("non-empty");
                plain.push(c);
                pos += 1;
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    if let Some((kind, _)) = open.first() {
        return Err(TagError::UnbalancedTags(kind.name()));
    }
    Ok(TaggedText { plain, ana, ant })
}

fn contains_tag_literal(text: &str) -> bool {
    [ANA_OPEN, ANA_CLOSE, ANT_OPEN, ANT_CLOSE]
        .iter()
        .any(|t| text.contains(t))
}

/// Inserts tags into `plain`. Inverse of [`parse_tagged_text`].
pub fn render_tagged_text(
    plain: &str,
    ana: Option<Span>,
    ant: Option<Span>,
) -> Result<String, TagError> {
    if contains_tag_literal(plain) {
        return Err(TagError::TagLiteralInText);
    }
    let len = char_len(plain);
    for span in [ana, ant].into_iter().flatten() {
        if !span.is_valid_for(len) {
            return Err(TagError::InvalidSpan { span, len });
        }
    }
    if let (Some(a), Some(t)) = (ana, ant) {
        if a.overlaps(&t) && !t.contains(&a) {
            return Err(TagError::CrossingTags);
        }
    }

    let mut out = String::with_capacity(plain.len() + 22);
    let emit_boundary = |out: &mut String, pos: usize| {
        // Closing before opening; the inner anaphor closes first and the
        // outer antecedent opens first.
        if ana.is_some_and(|s| s.end == pos) {
            out.push_str(ANA_CLOSE);
        }
        if ant.is_some_and(|s| s.end == pos) {
            out.push_str(ANT_CLOSE);
        }
        if ant.is_some_and(|s| s.start == pos) {
            out.push_str(ANT_OPEN);
        }
        if ana.is_some_and(|s| s.start == pos) {
            out.push_str(ANA_OPEN);
        }
    };
    for (i, c) in plain.chars().enumerate() {
        emit_boundary(&mut out, i);
        out.push(c);
    }
    emit_boundary(&mut out, len);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::char_slice;
    use proptest::prelude::*;

    /// Independent offset oracle: walks the tagged string and counts the
    /// characters that are not part of any tag literal before `marker`.
    fn count_plain_chars_before(tagged: &str, byte_idx: usize) -> usize {
        let prefix = &tagged[..byte_idx];
        let mut stripped = prefix.to_string();
        for lit in [ANA_OPEN, ANA_CLOSE, ANT_OPEN, ANT_CLOSE] {
            stripped = stripped.replace(lit, "");
        }
        stripped.chars().count()
    }

    #[test]
    fn parses_figure_example() {
        let t = parse_tagged_text("Budova, <ana>která</ana> byla dokončena").unwrap();
        assert_eq!(t.plain, "Budova, která byla dokončena");
        let ana = t.ana.unwrap();
        assert_eq!(char_slice(&t.plain, ana), "která");
        assert_eq!(ana, Span { start: 8, end: 13 });
        assert_eq!(t.ant, None);
    }

    #[test]
    fn untagged_is_identity() {
        let t = parse_tagged_text("abc").unwrap();
        assert_eq!(
            t,
            TaggedText {
                plain: "abc".into(),
                ana: None,
                ant: None
            }
        );
    }

    #[test]
    fn nested_offsets_match_oracle() {
        let tagged = "x <ant>a <ana>b</ana> c</ant> y";
        let t = parse_tagged_text(tagged).unwrap();
        let ant_start = count_plain_chars_before(tagged, tagged.find(ANT_OPEN).unwrap());
        let ant_end = count_plain_chars_before(tagged, tagged.find(ANT_CLOSE).unwrap());
        let ana_start = count_plain_chars_before(tagged, tagged.find(ANA_OPEN).unwrap());
        let ana_end = count_plain_chars_before(tagged, tagged.find(ANA_CLOSE).unwrap());
        assert_eq!((ant_start, ant_end, ana_start, ana_end), (2, 7, 4, 5));
        assert_eq!(t.ant, Some(Span { start: 2, end: 7 }));
        assert_eq!(t.ana, Some(Span { start: 4, end: 5 }));
        assert_eq!(char_slice(&t.plain, t.ant.unwrap()), "a b c");
        assert_eq!(char_slice(&t.plain, t.ana.unwrap()), "b");
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(
            parse_tagged_text("x <ant>a <ana>b</ant> c</ana>"),
            Err(TagError::CrossingTags)
        );
        assert_eq!(
            parse_tagged_text("<ana>a</ana> <ana>b</ana>"),
            Err(TagError::DuplicateTag("ana"))
        );
        assert_eq!(
            parse_tagged_text("<ana>a"),
            Err(TagError::UnbalancedTags("ana"))
        );
        assert_eq!(
            parse_tagged_text("a</ant>"),
            Err(TagError::UnbalancedTags("ant"))
        );
        assert_eq!(
            parse_tagged_text("a <ant></ant>"),
            Err(TagError::EmptyTagContent("ant"))
        );
        // The antecedent may not sit inside the anaphor.
        assert_eq!(
            parse_tagged_text("<ana>a <ant>b</ant></ana>"),
            Err(TagError::CrossingTags)
        );
    }

    #[test]
    fn renders_figure_example() {
        let plain = "Budova, která byla dokončena";
        assert_eq!(
            render_tagged_text(plain, Some(Span { start: 8, end: 13 }), None).unwrap(),
            "Budova, <ana>která</ana> byla dokončena"
        );
        assert_eq!(render_tagged_text("abc", None, None).unwrap(), "abc");
    }

    #[test]
    fn render_rejects_crossing_and_bad_spans() {
        assert_eq!(
            render_tagged_text(
                "abcdef",
                Some(Span { start: 0, end: 3 }),
                Some(Span { start: 2, end: 5 })
            ),
            Err(TagError::CrossingTags)
        );
        assert!(matches!(
            render_tagged_text("abc", Some(Span { start: 1, end: 9 }), None),
            Err(TagError::InvalidSpan { .. })
        ));
        assert_eq!(
            render_tagged_text("a<ana>", None, None),
            Err(TagError::TagLiteralInText)
        );
    }

    #[test]
    fn identical_spans_nest_antecedent_outside() {
        let s = Span { start: 0, end: 1 };
        let r = render_tagged_text("x", Some(s), Some(s)).unwrap();
        assert_eq!(r, "<ant><ana>x</ana></ant>");
        let back = parse_tagged_text(&r).unwrap();
        assert_eq!((back.ana, back.ant), (Some(s), Some(s)));
    }

    fn span_strategy(len: usize) -> impl Strategy<Value = Option<Span>> {
        prop_oneof![
            Just(None),
            (0..len, 1..=len)
                .prop_filter_map("non-empty", move |(a, b)| {
                    let (s, e) = (a.min(b), a.max(b));
                    (s < e && e <= len).then_some(Span { start: s, end: e })
                })
                .prop_map(Some),
        ]
    }

    fn case_strategy() -> impl Strategy<Value = (String, Option<Span>, Option<Span>)> {
        "[a-zěščřžýáíéůú ,.<>/]{1,40}"
            .prop_filter("no tag literals", |s| !contains_tag_literal(s))
            .prop_flat_map(|plain| {
                let len = plain.chars().count();
                (Just(plain), span_strategy(len), span_strategy(len))
            })
            .prop_filter("containment or disjoint", |(_, ana, ant)| {
                match (ana, ant) {
                    (Some(a), Some(t)) => !a.overlaps(t) || t.contains(a),
                    _ => true,
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]
        #[test]
        fn render_then_parse_round_trips((plain, ana, ant) in case_strategy()) {
            let tagged = render_tagged_text(&plain, ana, ant).unwrap();
            let back = parse_tagged_text(&tagged).unwrap();
            prop_assert_eq!(back, TaggedText { plain, ana, ant });
        }
    }
}
