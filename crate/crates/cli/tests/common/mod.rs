//! Synthetic corpora and helpers shared by the CLI and acceptance tests.
#![allow(dead_code)]

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn data_file(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn list(name: &str) -> Vec<String> {
    data_file(name)
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}

fn thai_only(w: &str) -> bool {
    w.chars().all(|c| ('\u{0E01}'..='\u{0E4E}').contains(&c) && c != 'ๆ' && c != 'ฯ')
}

pub const ENGLISH: [&str; 16] = [
    "market", "river", "window", "garden", "yellow", "number", "simple", "travel", "summer", "people", "letter",
    "morning", "kitchen", "forest", "silver", "button",
];

/// Random text generator over the bundled Thai dictionary. Ordinary words
/// avoid every bundled lexicon, so generated "clean" text passes the
/// default quality rules.
pub struct Gen {
    pub rng: ChaCha8Rng,
    pub vocab: Vec<String>,
    pub stopwords: Vec<String>,
    pub gambling: Vec<String>,
    pub adult: Vec<String>,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        let mut flagged: HashSet<String> = HashSet::new();
        for f in ["naughty_th.txt", "gambling_th.txt", "adult_th.txt", "stopwords_th.txt"] {
            flagged.extend(list(f));
        }
        let phrases = list("truncation_phrases.txt");
        let dict = list("dictionary_th.txt");
        let dict_set: HashSet<&String> = dict.iter().collect();
        let vocab: Vec<String> = dict
            .iter()
            .filter(|w| thai_only(w))
            .filter(|w| (3..=8).contains(&w.chars().count()))
            .filter(|w| !flagged.contains(*w))
            .filter(|w| !flagged.iter().any(|f| f.chars().count() >= 3 && w.contains(f.as_str())))
            .filter(|w| !phrases.iter().any(|p| w.contains(p.as_str())))
            .cloned()
            .collect();
        let stopwords: Vec<String> = list("stopwords_th.txt")
            .into_iter()
            .filter(|w| thai_only(w) && w.chars().count() >= 3 && dict_set.contains(w))
            .take(40)
            .collect();
        let in_dict = |f: &str| list(f).into_iter().filter(|w| thai_only(w) && dict_set.contains(w)).collect::<Vec<_>>();
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            vocab,
            stopwords,
            gambling: in_dict("gambling_th.txt"),
            adult: in_dict("adult_th.txt"),
        }
    }

    pub fn word(&mut self) -> String {
        if self.rng.gen_bool(0.15) {
            self.stopwords.choose(&mut self.rng).unwrap().clone()
        } else {
            self.vocab.choose(&mut self.rng).unwrap().clone()
        }
    }

    /// `words` words in lines of 8 to 16.
    pub fn lines_of(&mut self, words: Vec<String>) -> String {
        let mut out = String::new();
        let mut i = 0;
        while i < words.len() {
            let n = self.rng.gen_range(8..=16).min(words.len() - i);
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&words[i..i + n].join(" "));
            i += n;
        }
        out
    }

    pub fn quality_text(&mut self, words: usize) -> String {
        let w: Vec<String> = (0..words).map(|_| self.word()).collect();
        self.lines_of(w)
    }

    /// Like [`Gen::quality_text`], with every `every`-th word drawn from
    /// `terms`.
    pub fn lexicon_text(&mut self, words: usize, terms: &[String], every: usize) -> String {
        let w: Vec<String> = (0..words)
            .map(|i| {
                if i % every == 0 {
                    terms.choose(&mut self.rng).unwrap().clone()
                } else {
                    self.word()
                }
            })
            .collect();
        self.lines_of(w)
    }

    pub fn english_text(&mut self, words: usize) -> String {
        let w: Vec<String> = (0..words)
            .map(|_| ENGLISH.choose(&mut self.rng).unwrap().to_string())
            .collect();
        self.lines_of(w)
    }
}

pub fn doc_line(id: &str, text: &str, url: &str) -> String {
    serde_json::json!({ "id": id, "text": text, "url": url, "source": "synthetic" }).to_string()
}

/// Writes `lines` into `shards` files `part-NNN.jsonl` under `dir`, in order.
pub fn write_shards(dir: &Path, lines: &[String], shards: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let per = lines.len().div_ceil(shards).max(1);
    for s in 0..shards {
        let lo = (s * per).min(lines.len());
        let hi = ((s + 1) * per).min(lines.len());
        let mut body = lines[lo..hi].join("\n");
        if !body.is_empty() {
            body.push('\n');
        }
        std::fs::write(dir.join(format!("part-{s:03}.jsonl")), body).unwrap();
    }
}

pub fn sieve(args: &[&str]) -> Output {
    sieve_env(args, &[])
}

pub fn sieve_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sieve"));
    cmd.args(args).env_remove("SIEVE_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("run sieve")
}

#[track_caller]
pub fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every file under `dir`, sorted, as (relative path, bytes).
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

pub fn tree_hash(dir: &Path) -> String {
    let mut h = Sha256::new();
    for (rel, bytes) in tree(dir) {
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(Sha256::digest(&bytes));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
