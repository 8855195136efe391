//! Content filters: lexicon labeling, hashed-n-gram logistic classifiers
//! for adult and gambling text, and PII tagging.

mod features;
mod model;
mod pii;

use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use features::{featurize, ngram_hash, SparseVector};
pub use model::{train_classifier, LinearTextModel, TrainParams, TrainReport, DEFAULT_DIM, DEFAULT_NGRAM_MAX};
pub use pii::{tag_pii, PiiRules, ATTRIBUTE_NAMES as PII_ATTRIBUTES};

use crate::doc::{open_reader, open_writer, Document};
use crate::error::{Result, SieveError};
use crate::taggers::Lexicon;
use crate::thai::Tokenizer;

/// Distinct lexicon words a document needs before it is labeled positive.
pub const MIN_DISTINCT_LEXICON_WORDS: usize = 3;

/// Number of distinct tokens of `text` that appear in `lexicon`.
pub fn distinct_lexicon_hits(text: &str, lexicon: &Lexicon, tokenizer: &Tokenizer) -> usize {
    let mut hits: HashSet<&str> = HashSet::new();
    tokenizer.for_each_token(text, |t| {
        if lexicon.contains(t.text) {
            hits.insert(t.text);
        }
    });
    hits.len()
}

/// True when the text holds at least `min_distinct` distinct lexicon words.
pub fn label_by_lexicon(text: &str, lexicon: &Lexicon, min_distinct: usize, tokenizer: &Tokenizer) -> bool {
    distinct_lexicon_hits(text, lexicon, tokenizer) >= min_distinct
}

/// One row of a labeled-data file: `{"text": ..., "label": 0|1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    #[serde(with = "label_int")]
    pub label: bool,
}

mod label_int {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(de::Error::custom(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

pub fn read_labeled(path: &Path) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for (i, line) in open_reader(path)?.lines().enumerate() {
        let line = line.map_err(|e| SieveError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex = serde_json::from_str(&line).map_err(|e| SieveError::Schema {
            path: Some(path.to_path_buf()),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(ex);
    }
    Ok(out)
}

pub fn write_labeled(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    use std::io::Write;
    let mut w = open_writer(path)?;
    for ex in examples {
        let line = serde_json::to_string(ex).map_err(|e| SieveError::Format(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| SieveError::io(path, e))?;
    }
    w.flush().map_err(|e| SieveError::io(path, e))
}

/// Labels each document with [`label_by_lexicon`], then appends externally
/// identified positives (for example from a separate review pass).
pub fn build_training_set<'a>(
    docs: impl IntoIterator<Item = &'a Document>,
    lexicon: &Lexicon,
    tokenizer: &Tokenizer,
    external_positives: impl IntoIterator<Item = String>,
) -> Vec<LabeledExample> {
    let mut out: Vec<LabeledExample> = docs
        .into_iter()
        .map(|d| LabeledExample {
            label: label_by_lexicon(&d.text, lexicon, MIN_DISTINCT_LEXICON_WORDS, tokenizer),
            text: d.text.clone(),
        })
        .collect();
    out.extend(
        external_positives
            .into_iter()
            .map(|text| LabeledExample { text, label: true }),
    );
    out
}
