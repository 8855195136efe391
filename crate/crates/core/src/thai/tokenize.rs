use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{is_thai, Dictionary};
use crate::error::Result;

/// A token borrowed from the text it was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    /// Byte offset of the token in the source text.
    pub start: usize,
}

impl Token<'_> {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }

    /// Length in Unicode scalars.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMode {
    #[default]
    Simple,
    Whitespace,
}

/// Word segmentation strategy.
///
/// Both strategies cut at whitespace and never emit empty tokens; the gaps
/// between consecutive tokens are exactly the whitespace they removed.
#[derive(Debug, Clone)]
pub enum Tokenizer {
    /// Whitespace only.
    Whitespace,
    /// Whitespace and Thai/non-Thai script transitions, with Thai runs
    /// segmented by dictionary maximal matching.
    Simple(Arc<Dictionary>),
}

impl Tokenizer {
    pub fn simple(dictionary: Dictionary) -> Self {
        Tokenizer::Simple(Arc::new(dictionary))
    }

    /// Builds a tokenizer for `mode`. Simple mode uses the dictionary at
    /// `path`, or the bundled word list when no path is given.
    pub fn from_mode(mode: TokenizerMode, dictionary: Option<&Path>) -> Result<Self> {
        Ok(match mode {
            TokenizerMode::Whitespace => Tokenizer::Whitespace,
            TokenizerMode::Simple => Tokenizer::simple(match dictionary {
                Some(p) => Dictionary::load(p)?,
                None => Dictionary::bundled(),
            }),
        })
    }

    pub fn mode(&self) -> TokenizerMode {
        match self {
            Tokenizer::Whitespace => TokenizerMode::Whitespace,
            Tokenizer::Simple(_) => TokenizerMode::Simple,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::Simple(_) => "simple",
        }
    }

    pub fn tokenize<'a>(&self, text: &'a str) -> Vec<Token<'a>> {
        let mut out = Vec::new();
        self.for_each_token(text, |t| out.push(t));
        out
    }

    pub fn count(&self, text: &str) -> usize {
        let mut n = 0;
        self.for_each_token(text, |_| n += 1);
        n
    }

    pub fn for_each_token<'a>(&self, text: &'a str, mut f: impl FnMut(Token<'a>)) {
        let mut scratch = Scratch::default();
        for (start, chunk) in whitespace_chunks(text) {
            match self {
                Tokenizer::Whitespace => f(Token { text: chunk, start }),
                Tokenizer::Simple(dict) => {
                    for (run_start, run, thai) in script_runs(chunk) {
                        let start = start + run_start;
                        if thai {
                            segment_thai(dict, run, start, &mut scratch, &mut f);
                        } else {
                            f(Token { text: run, start });
                        }
                    }
                }
            }
        }
    }
}

fn whitespace_chunks(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let base = text.as_ptr() as usize;
    text.split(char::is_whitespace)
        .filter(|c| !c.is_empty())
        .map(move |c| (c.as_ptr() as usize - base, c))
}

/// Maximal runs of Thai or non-Thai scalars.
fn script_runs(chunk: &str) -> impl Iterator<Item = (usize, &str, bool)> {
    let mut rest = chunk;
    let mut offset = 0;
    std::iter::from_fn(move || {
        let first = rest.chars().next()?;
        let thai = is_thai(first);
        let len = rest
            .char_indices()
            .find(|&(_, c)| is_thai(c) != thai)
            .map_or(rest.len(), |(i, _)| i);
        let (run, tail) = rest.split_at(len);
        let item = (offset, run, thai);
        offset += len;
        rest = tail;
        Some(item)
    })
}

#[derive(Default)]
struct Scratch {
    chars: Vec<char>,
    offsets: Vec<usize>,
    // (unknown chars, tokens) for the best segmentation of the suffix
    cost: Vec<(u32, u32)>,
    next: Vec<u32>,
}

/// Maximal matching: choose the segmentation of the run with the fewest
/// out-of-dictionary characters, then the fewest tokens, preferring the
/// longer first word on ties. Characters no entry covers become
/// single-character tokens.
fn segment_thai<'a>(
    dict: &Dictionary,
    run: &'a str,
    base: usize,
    s: &mut Scratch,
    f: &mut impl FnMut(Token<'a>),
) {
    s.chars.clear();
    s.offsets.clear();
    for (i, c) in run.char_indices() {
        s.chars.push(c);
        s.offsets.push(i);
    }
    let n = s.chars.len();
    s.offsets.push(run.len());
    s.cost.clear();
    s.cost.resize(n + 1, (0, 0));
    s.next.clear();
    s.next.resize(n + 1, 0);

    for i in (0..n).rev() {
        let (u, t) = s.cost[i + 1];
        let mut best = (u + 1, t + 1);
        let mut best_next = i + 1;
        let cost = &s.cost;
        dict.for_each_prefix(&s.chars[i..], |len| {
            let (u, t) = cost[i + len];
            let c = (u, t + 1);
            if c <= best {
                best = c;
                best_next = i + len;
            }
        });
        s.cost[i] = best;
        s.next[i] = best_next as u32;
    }

    let mut i = 0;
    while i < n {
        let j = s.next[i] as usize;
        let (a, b) = (s.offsets[i], s.offsets[j]);
        f(Token {
            text: &run[a..b],
            start: base + a,
        });
        i = j;
    }
}
