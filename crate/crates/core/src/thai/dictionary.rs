use std::path::Path;

use crate::error::{Result, SieveError};

const BUNDLED: &str = include_str!("../../data/dictionary_th.txt");

#[derive(Debug, Clone, Default)]
struct Node {
    // sorted by char
    children: Vec<(char, u32)>,
    terminal: bool,
}

/// A word list stored as a character trie.
#[derive(Debug, Clone)]
pub struct Dictionary {
    nodes: Vec<Node>,
    len: usize,
}

impl Default for Dictionary {
    fn default() -> Self {
        Dictionary {
            nodes: vec![Node::default()],
            len: 0,
        }
    }
}

impl Dictionary {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut d = Dictionary::default();
        for w in words {
            d.insert(w.as_ref());
        }
        d
    }

    /// Parses one term per line; blank lines and `#` comments are ignored.
    pub fn parse(contents: &str) -> Self {
        Self::from_words(
            contents
                .lines()
                .map(|l| l.trim().trim_start_matches('\u{FEFF}'))
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = std::fs::read_to_string(path).map_err(|e| {
            SieveError::Config(format!("cannot read dictionary {}: {e}", path.display()))
        })?;
        Ok(Self::parse(&contents))
    }

    /// The Thai word list shipped with the crate (about 12k entries).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED)
    }

    pub fn insert(&mut self, word: &str) {
        if word.is_empty() {
            return;
        }
        let mut node = 0usize;
        for c in word.chars() {
            node = match self.nodes[node].children.binary_search_by_key(&c, |&(k, _)| k) {
                Ok(i) => self.nodes[node].children[i].1 as usize,
                Err(i) => {
                    let id = self.nodes.len() as u32;
                    self.nodes.push(Node::default());
                    self.nodes[node].children.insert(i, (c, id));
                    id as usize
                }
            };
        }
        if !self.nodes[node].terminal {
            self.nodes[node].terminal = true;
            self.len += 1;
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        let mut node = 0usize;
        for c in word.chars() {
            match self.child(node, c) {
                Some(n) => node = n,
                None => return false,
            }
        }
        !word.is_empty() && self.nodes[node].terminal
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn child(&self, node: usize, c: char) -> Option<usize> {
        let children = &self.nodes[node].children;
        children
            .binary_search_by_key(&c, |&(k, _)| k)
            .ok()
            .map(|i| children[i].1 as usize)
    }

    /// Calls `f` with the length (in chars) of every entry that is a prefix
    /// of `chars`, shortest first.
    pub(crate) fn for_each_prefix(&self, chars: &[char], mut f: impl FnMut(usize)) {
        let mut node = 0usize;
        for (i, &c) in chars.iter().enumerate() {
            match self.child(node, c) {
                Some(n) => node = n,
                None => return,
            }
            if self.nodes[node].terminal {
                f(i + 1);
            }
        }
    }
}
