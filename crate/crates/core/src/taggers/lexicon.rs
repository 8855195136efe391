use std::collections::HashSet;
use std::path::Path;

use crate::error::{Result, SieveError};

/// A named set of single-token terms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    name: String,
    terms: HashSet<String>,
}

impl Lexicon {
    pub fn new<I, S>(name: impl Into<String>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        let terms: HashSet<String> = terms.into_iter().map(Into::into).collect();
        if terms.is_empty() {
            return Err(SieveError::Config(format!("lexicon `{name}` is empty")));
        }
        if let Some(bad) = terms.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(SieveError::Config(format!(
                "lexicon `{name}`: term {bad:?} is empty or contains whitespace"
            )));
        }
        Ok(Lexicon { name, terms })
    }

    /// One term per line; blank lines and `#` comments are ignored.
    pub fn parse(name: impl Into<String>, contents: &str) -> Result<Self> {
        Self::new(name, parse_list(contents))
    }

    pub fn load(name: impl Into<String>, path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| {
            SieveError::Config(format!("cannot read lexicon {}: {e}", path.display()))
        })?;
        Self::parse(name, &contents)
    }

    pub fn bundled_stopwords() -> Self {
        Self::parse("stopwords", include_str!("../../data/stopwords_th.txt")).expect("bundled list")
    }

    pub fn bundled_naughty() -> Self {
        Self::parse("naughty", include_str!("../../data/naughty_th.txt")).expect("bundled list")
    }

    pub fn bundled_gambling() -> Self {
        Self::parse("gambling", include_str!("../../data/gambling_th.txt")).expect("bundled list")
    }

    pub fn bundled_adult() -> Self {
        Self::parse("adult", include_str!("../../data/adult_th.txt")).expect("bundled list")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn contains(&self, token: &str) -> bool {
        self.terms.contains(token)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }
}

pub(crate) fn parse_list(contents: &str) -> Vec<String> {
    contents
        .lines()
        .map(|l| l.trim().trim_start_matches('\u{FEFF}'))
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Phrases that mark an excerpted page. Matching is a case-insensitive
/// (ASCII) substring search over the raw text, so entries may contain spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationPhrases(Vec<String>);

impl TruncationPhrases {
    pub fn new(phrases: Vec<String>) -> Self {
        TruncationPhrases(phrases.into_iter().filter(|p| !p.is_empty()).collect())
    }

    pub fn bundled() -> Self {
        Self::new(parse_list(include_str!("../../data/truncation_phrases.txt")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| {
            SieveError::Config(format!("cannot read phrase list {}: {e}", path.display()))
        })?;
        Ok(Self::new(parse_list(&contents)))
    }

    pub fn phrases(&self) -> &[String] {
        &self.0
    }

    pub fn any_in(&self, text: &str) -> bool {
        self.0.iter().any(|p| find_ascii_ci(text, p).next().is_some())
    }
}

/// Non-overlapping matches of `needle` in `haystack`, ignoring ASCII case.
pub(crate) fn find_ascii_ci<'a>(
    haystack: &'a str,
    needle: &'a str,
) -> impl Iterator<Item = (usize, usize)> + 'a {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    let mut pos = 0usize;
    std::iter::from_fn(move || {
        if n.is_empty() {
            return None;
        }
        while pos + n.len() <= h.len() {
            if h[pos..pos + n.len()].eq_ignore_ascii_case(n) {
                let m = (pos, pos + n.len());
                pos += n.len();
                return Some(m);
            }
            pos += 1;
        }
        None
    })
}
