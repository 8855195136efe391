//! Thai character classes, script ratios, and word segmentation.
//!
//! "Characters" are Unicode scalar values throughout: ratios never count
//! bytes or grapheme clusters.

mod dictionary;
mod tokenize;

pub use dictionary::Dictionary;
pub use tokenize::{Token, Tokenizer, TokenizerMode};

/// Class of a scalar with respect to the Thai block U+0E00–U+0E7F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThaiCharClass {
    Consonant,
    Vowel,
    ToneMark,
    ThaiDigit,
    OtherThai,
    NonThai,
}

impl ThaiCharClass {
    pub fn is_thai(self) -> bool {
        self != ThaiCharClass::NonThai
    }
}

pub fn classify_char(c: char) -> ThaiCharClass {
    match c {
        '\u{0E01}'..='\u{0E2E}' => ThaiCharClass::Consonant,
        '\u{0E30}'..='\u{0E3A}' | '\u{0E40}'..='\u{0E45}' | '\u{0E47}' => ThaiCharClass::Vowel,
        '\u{0E48}'..='\u{0E4B}' => ThaiCharClass::ToneMark,
        '\u{0E50}'..='\u{0E59}' => ThaiCharClass::ThaiDigit,
        '\u{0E00}'..='\u{0E7F}' => ThaiCharClass::OtherThai,
        _ => ThaiCharClass::NonThai,
    }
}

#[inline]
pub fn is_thai(c: char) -> bool {
    ('\u{0E00}'..='\u{0E7F}').contains(&c)
}

fn ratio(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Fraction of scalars in the Thai block; 0.0 for empty text.
pub fn thai_char_ratio(text: &str) -> f64 {
    let (thai, total) = text
        .chars()
        .fold((0, 0), |(t, n), c| (t + is_thai(c) as usize, n + 1));
    ratio(thai, total)
}

/// Fraction of scalars that are Thai consonants; 0.0 for empty text.
pub fn thai_consonant_char_ratio(text: &str) -> f64 {
    let (cons, total) = text.chars().fold((0, 0), |(t, n), c| {
        (t + (classify_char(c) == ThaiCharClass::Consonant) as usize, n + 1)
    });
    ratio(cons, total)
}

/// Fraction of tokens containing at least one Thai scalar.
pub fn fraction_tokens_with_thai<S: AsRef<str>>(tokens: &[S]) -> f64 {
    let with = tokens
        .iter()
        .filter(|t| t.as_ref().chars().any(is_thai))
        .count();
    ratio(with, tokens.len())
}

/// Splits on maximal runs of `\n`, dropping empty segments.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.split('\n').filter(|l| !l.is_empty()).collect()
}

/// Like [`split_lines`] but yields the byte offset of each line as well.
pub fn split_lines_with_offsets(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    text.split('\n').filter_map(move |line| {
        let start = offset;
        offset += line.len() + 1;
        (!line.is_empty()).then_some((start, line))
    })
}
