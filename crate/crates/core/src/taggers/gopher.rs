//! Document-quality heuristics in the Gopher style, adapted for Thai.

use std::collections::{BTreeMap, HashSet};
use std::hash::Hash;

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};

use super::lexicon::{Lexicon, TruncationPhrases};
use crate::doc::{Document, SpanAttribute};
use crate::error::{Result, SieveError};
use crate::thai::{self, Tokenizer};

pub const TOP_NGRAM_SIZES: [usize; 3] = [2, 3, 4];
pub const DUP_NGRAM_SIZES: [usize; 6] = [5, 6, 7, 8, 9, 10];

const BULLETS: [&str; 5] = ["•", "‣", "▪", "-", "*"];
const ELLIPSES: [&str; 2] = ["…", "..."];

/// Which Thai-script measure gates the quality stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThaiGate {
    /// Fraction of tokens containing a Thai letter.
    #[default]
    TokenFraction,
    /// Fraction of all characters that are Thai consonants.
    ConsonantRatio,
}

/// Thresholds applied to the Gopher scores. Every field can be overridden
/// from the pipeline config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GopherThresholds {
    pub min_words: u64,
    pub max_words: u64,
    pub median_len_min: f64,
    pub median_len_max: f64,
    pub symbol_ratio_max: f64,
    pub thai_fraction_min: f64,
    pub required_words_min: u64,
    pub bullet_frac_max: f64,
    pub ellipsis_frac_max: f64,
    pub dup_line_frac_max: f64,
    pub dup_line_char_frac_max: f64,
    pub top_ngram_char_frac_max: BTreeMap<usize, f64>,
    pub dup_ngram_char_frac_max: BTreeMap<usize, f64>,
}

impl Default for GopherThresholds {
    fn default() -> Self {
        GopherThresholds {
            min_words: 200,
            max_words: 100_000,
            median_len_min: 3.0,
            median_len_max: 10.0,
            symbol_ratio_max: 0.10,
            thai_fraction_min: 0.80,
            required_words_min: 2,
            bullet_frac_max: 0.90,
            ellipsis_frac_max: 0.30,
            dup_line_frac_max: 0.30,
            dup_line_char_frac_max: 0.30,
            top_ngram_char_frac_max: BTreeMap::from([(2, 0.20), (3, 0.18), (4, 0.16)]),
            dup_ngram_char_frac_max: BTreeMap::from([
                (5, 0.15),
                (6, 0.14),
                (7, 0.13),
                (8, 0.12),
                (9, 0.11),
                (10, 0.10),
            ]),
        }
    }
}

impl GopherThresholds {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SieveError::Config(format!("gopher thresholds: {m}")));
        if self.min_words >= self.max_words {
            return bad(format!("min_words {} >= max_words {}", self.min_words, self.max_words));
        }
        if self.median_len_min > self.median_len_max {
            return bad("median_len_min > median_len_max".into());
        }
        let fractions = [
            ("thai_fraction_min", self.thai_fraction_min),
            ("bullet_frac_max", self.bullet_frac_max),
            ("ellipsis_frac_max", self.ellipsis_frac_max),
            ("dup_line_frac_max", self.dup_line_frac_max),
            ("dup_line_char_frac_max", self.dup_line_char_frac_max),
        ];
        for (name, v) in fractions
            .into_iter()
            .chain(self.top_ngram_char_frac_max.values().map(|&v| ("top_ngram_char_frac_max", v)))
            .chain(self.dup_ngram_char_frac_max.values().map(|&v| ("dup_ngram_char_frac_max", v)))
        {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is not a fraction"));
            }
        }
        if !self.symbol_ratio_max.is_finite() || self.symbol_ratio_max < 0.0 {
            return bad("symbol_ratio_max must be non-negative".into());
        }
        if !self.top_ngram_char_frac_max.keys().copied().eq(TOP_NGRAM_SIZES) {
            return bad("top_ngram_char_frac_max must be keyed by exactly 2, 3, 4".into());
        }
        if !self.dup_ngram_char_frac_max.keys().copied().eq(DUP_NGRAM_SIZES) {
            return bad("dup_ngram_char_frac_max must be keyed by exactly 5..=10".into());
        }
        Ok(())
    }

    /// The keep-conditions of the quality stage, one clause per rule.
    pub fn keep_clauses(&self, gate: ThaiGate) -> Vec<String> {
        let mut c = vec![
            format!("gopher.word_count >= {}", self.min_words),
            format!("gopher.word_count <= {}", self.max_words),
            format!("gopher.median_word_length >= {}", self.median_len_min),
            format!("gopher.median_word_length <= {}", self.median_len_max),
            format!("gopher.symbol_to_word_ratio <= {}", self.symbol_ratio_max),
            match gate {
                ThaiGate::TokenFraction => {
                    format!("gopher.fraction_words_with_thai >= {}", self.thai_fraction_min)
                }
                ThaiGate::ConsonantRatio => {
                    format!("gopher.thai_consonant_char_ratio >= {}", self.thai_fraction_min)
                }
            },
            format!("gopher.required_word_count >= {}", self.required_words_min),
            format!("gopher.bullet_line_fraction <= {}", self.bullet_frac_max),
            format!("gopher.ellipsis_line_fraction <= {}", self.ellipsis_frac_max),
            format!("gopher.duplicate_line_fraction <= {}", self.dup_line_frac_max),
            format!("gopher.duplicate_line_char_fraction <= {}", self.dup_line_char_frac_max),
        ];
        for (n, v) in &self.top_ngram_char_frac_max {
            c.push(format!("gopher.top_ngram_char_frac_{n} <= {v}"));
        }
        for (n, v) in &self.dup_ngram_char_frac_max {
            c.push(format!("gopher.dup_ngram_char_frac_{n} <= {v}"));
        }
        c.push("gopher.has_truncation_marker == 0".into());
        c
    }
}

/// Every score the Gopher tagger emits for one document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GopherScores {
    pub word_count: usize,
    pub median_word_length: usize,
    pub symbol_to_word_ratio: f64,
    pub fraction_words_with_thai: f64,
    pub thai_consonant_char_ratio: f64,
    pub required_word_count: usize,
    pub bullet_line_fraction: f64,
    pub ellipsis_line_fraction: f64,
    pub duplicate_line_fraction: f64,
    pub duplicate_line_char_fraction: f64,
    /// Indexed like [`TOP_NGRAM_SIZES`].
    pub top_ngram_char_frac: [f64; 3],
    /// Indexed like [`DUP_NGRAM_SIZES`].
    pub dup_ngram_char_frac: [f64; 6],
    pub has_truncation_marker: bool,
}

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Occurrences of `#`, `…` and `...` in the text.
pub fn symbol_count(text: &str) -> usize {
    text.matches('#').count() + text.matches('…').count() + text.matches("...").count()
}

/// Lower median of the values; 0 for an empty list.
pub fn lower_median(values: &[usize]) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    let mid = (v.len() - 1) / 2;
    *v.select_nth_unstable(mid).1
}

/// Char mass of positions covered by the single most frequent n-gram
/// (ties go to the earliest first occurrence), overlapping occurrences
/// counted once.
pub fn top_ngram_char_mass<T: Hash + Eq>(tokens: &[T], lens: &[usize], n: usize) -> usize {
    if n == 0 || tokens.len() < n {
        return 0;
    }
    let mut counts: FxHashMap<&[T], (usize, usize)> = FxHashMap::default();
    for (i, w) in tokens.windows(n).enumerate() {
        counts.entry(w).or_insert((0, i)).0 += 1;
    }
    let (&top, _) = counts
        .iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .expect("at least one window");
    let mut covered = vec![false; tokens.len()];
    for (i, w) in tokens.windows(n).enumerate() {
        if w == top {
            covered[i..i + n].iter_mut().for_each(|c| *c = true);
        }
    }
    mass(&covered, lens)
}

/// Char mass of positions covered by any n-gram occurring at least twice,
/// overlaps counted once.
pub fn dup_ngram_char_mass<T: Hash + Eq>(tokens: &[T], lens: &[usize], n: usize) -> usize {
    if n == 0 || tokens.len() < n {
        return 0;
    }
    let mut counts: FxHashMap<&[T], usize> = FxHashMap::default();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    let mut covered = vec![false; tokens.len()];
    for (i, w) in tokens.windows(n).enumerate() {
        if counts[w] >= 2 {
            covered[i..i + n].iter_mut().for_each(|c| *c = true);
        }
    }
    mass(&covered, lens)
}

fn mass(covered: &[bool], lens: &[usize]) -> usize {
    covered
        .iter()
        .zip(lens)
        .filter(|(c, _)| **c)
        .map(|(_, l)| l)
        .sum()
}

impl GopherScores {
    pub fn compute(
        text: &str,
        tokenizer: &Tokenizer,
        stopwords: &Lexicon,
        truncation: &TruncationPhrases,
    ) -> Self {
        let tokens: Vec<&str> = tokenizer.tokenize(text).into_iter().map(|t| t.text).collect();
        let lens: Vec<usize> = tokens.iter().map(|t| t.chars().count()).collect();
        let total_mass: usize = lens.iter().sum();
        let word_count = tokens.len();

        let required_word_count = tokens
            .iter()
            .filter(|t| stopwords.contains(t))
            .collect::<HashSet<_>>()
            .len();

        let lines = thai::split_lines(text);
        let bullets = lines
            .iter()
            .filter(|l| {
                let l = l.trim_start();
                BULLETS.iter().any(|b| l.starts_with(b))
            })
            .count();
        let ellipses = lines
            .iter()
            .filter(|l| {
                let l = l.trim_end();
                ELLIPSES.iter().any(|e| l.ends_with(e))
            })
            .count();
        let mut seen: HashSet<&str> = HashSet::with_capacity(lines.len());
        let (mut dup_lines, mut dup_chars, mut line_chars) = (0usize, 0usize, 0usize);
        for line in &lines {
            let chars = line.chars().count();
            line_chars += chars;
            if !seen.insert(line) {
                dup_lines += 1;
                dup_chars += chars;
            }
        }

        let mut interned: FxHashMap<&str, u32> = FxHashMap::default();
        let ids: Vec<u32> = tokens
            .iter()
            .map(|t| {
                let next = interned.len() as u32;
                *interned.entry(t).or_insert(next)
            })
            .collect();
        let mut top = [0.0; 3];
        for (slot, &n) in top.iter_mut().zip(&TOP_NGRAM_SIZES) {
            *slot = frac(top_ngram_char_mass(&ids, &lens, n), total_mass);
        }
        let mut dup = [0.0; 6];
        for (slot, &n) in dup.iter_mut().zip(&DUP_NGRAM_SIZES) {
            *slot = frac(dup_ngram_char_mass(&ids, &lens, n), total_mass);
        }

        GopherScores {
            word_count,
            median_word_length: lower_median(&lens),
            symbol_to_word_ratio: frac(symbol_count(text), word_count),
            fraction_words_with_thai: thai::fraction_tokens_with_thai(&tokens),
            thai_consonant_char_ratio: thai::thai_consonant_char_ratio(text),
            required_word_count,
            bullet_line_fraction: frac(bullets, lines.len()),
            ellipsis_line_fraction: frac(ellipses, lines.len()),
            duplicate_line_fraction: frac(dup_lines, lines.len()),
            duplicate_line_char_fraction: frac(dup_chars, line_chars),
            top_ngram_char_frac: top,
            dup_ngram_char_frac: dup,
            has_truncation_marker: truncation.any_in(text),
        }
    }

    /// `(attribute name, score)` pairs in emission order.
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut v = vec![
            ("gopher.word_count".to_string(), self.word_count as f64),
            ("gopher.median_word_length".into(), self.median_word_length as f64),
            ("gopher.symbol_to_word_ratio".into(), self.symbol_to_word_ratio),
            ("gopher.fraction_words_with_thai".into(), self.fraction_words_with_thai),
            ("gopher.thai_consonant_char_ratio".into(), self.thai_consonant_char_ratio),
            ("gopher.required_word_count".into(), self.required_word_count as f64),
            ("gopher.bullet_line_fraction".into(), self.bullet_line_fraction),
            ("gopher.ellipsis_line_fraction".into(), self.ellipsis_line_fraction),
            ("gopher.duplicate_line_fraction".into(), self.duplicate_line_fraction),
            ("gopher.duplicate_line_char_fraction".into(), self.duplicate_line_char_fraction),
        ];
        for (n, s) in TOP_NGRAM_SIZES.iter().zip(self.top_ngram_char_frac) {
            v.push((format!("gopher.top_ngram_char_frac_{n}"), s));
        }
        for (n, s) in DUP_NGRAM_SIZES.iter().zip(self.dup_ngram_char_frac) {
            v.push((format!("gopher.dup_ngram_char_frac_{n}"), s));
        }
        v.push((
            "gopher.has_truncation_marker".into(),
            if self.has_truncation_marker { 1.0 } else { 0.0 },
        ));
        v
    }
}

/// Names of every attribute [`tag_gopher`] emits.
pub fn attribute_names() -> Vec<String> {
    GopherScores::default().named().into_iter().map(|(n, _)| n).collect()
}

pub fn tag_gopher(
    doc: &Document,
    tokenizer: &Tokenizer,
    stopwords: &Lexicon,
    truncation: &TruncationPhrases,
) -> Vec<SpanAttribute> {
    GopherScores::compute(&doc.text, tokenizer, stopwords, truncation)
        .named()
        .into_iter()
        .map(|(name, score)| SpanAttribute::whole(name, &doc.text, score))
        .collect()
}
