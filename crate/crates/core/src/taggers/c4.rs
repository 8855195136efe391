//! C4-style heuristics. The ending-punctuation rule is deliberately absent:
//! Thai sentences do not conventionally end with punctuation.

use super::lexicon::{find_ascii_ci, Lexicon};
use crate::doc::{Document, Span, SpanAttribute};
use crate::thai::{split_lines_with_offsets, Tokenizer};

pub const MIN_WORDS_PER_LINE: usize = 3;

pub const ATTRIBUTE_NAMES: [&str; 7] = [
    "c4.has_curly_brace",
    "c4.has_lorem_ipsum",
    "c4.has_javascript",
    "c4.has_naughty_word",
    "c4.lines_with_too_few_words",
    "c4.line_count",
    "c4.corrupt_unicode",
];

fn spans(iter: impl Iterator<Item = (usize, usize)>) -> Vec<Span> {
    iter.map(|(s, e)| Span::new(s, e, 1.0)).collect()
}

/// Maximal runs of U+FFFD.
pub fn corrupt_unicode_spans(text: &str) -> Vec<Span> {
    let mut out: Vec<Span> = Vec::new();
    for (i, _) in text.match_indices('\u{FFFD}') {
        match out.last_mut() {
            Some(last) if last.end == i => last.end = i + '\u{FFFD}'.len_utf8(),
            _ => out.push(Span::new(i, i + '\u{FFFD}'.len_utf8(), 1.0)),
        }
    }
    out
}

pub fn tag_c4(doc: &Document, naughty: &Lexicon, tokenizer: &Tokenizer) -> Vec<SpanAttribute> {
    let text = doc.text.as_str();

    let braces = spans(
        text.match_indices(['{', '}'])
            .map(|(i, _)| (i, i + 1)),
    );
    let lorem = spans(find_ascii_ci(text, "lorem ipsum"));
    let javascript = spans(find_ascii_ci(text, "javascript"));
    let mut naughty_spans = Vec::new();
    tokenizer.for_each_token(text, |t| {
        if naughty.contains(t.text) {
            naughty_spans.push(Span::new(t.start, t.end(), 1.0));
        }
    });

    let mut short_lines = Vec::new();
    let mut line_count = 0usize;
    for (start, line) in split_lines_with_offsets(text) {
        line_count += 1;
        let words = tokenizer.count(line);
        if words < MIN_WORDS_PER_LINE {
            short_lines.push(Span::new(start, start + line.len(), words as f64));
        }
    }

    let lists = [braces, lorem, javascript, naughty_spans, short_lines];
    let mut out: Vec<SpanAttribute> = ATTRIBUTE_NAMES
        .iter()
        .zip(lists)
        .map(|(name, spans)| SpanAttribute {
            name: name.to_string(),
            spans,
        })
        .collect();
    out.push(SpanAttribute::whole(ATTRIBUTE_NAMES[5], text, line_count as f64));
    out.push(SpanAttribute {
        name: ATTRIBUTE_NAMES[6].to_string(),
        spans: corrupt_unicode_spans(text),
    });
    out
}
