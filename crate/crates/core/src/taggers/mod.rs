//! Pure per-document taggers. Each one maps a document to named span
//! attributes and never touches the corpus itself.

pub mod c4;
pub mod gopher;
mod lexicon;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use c4::tag_c4;
pub use gopher::{tag_gopher, GopherScores, GopherThresholds, ThaiGate};
pub use lexicon::{Lexicon, TruncationPhrases};

use crate::content::{tag_pii, LinearTextModel, PiiRules};
use crate::doc::{AttributeRecord, Document, SpanAttribute};
use crate::error::{Result, SieveError};
use crate::thai::{thai_char_ratio, Tokenizer};

/// Pass mark for `lang.thai_ratio`: at least half the characters Thai.
pub const LANGUAGE_CUTOFF: f64 = 0.5;

pub fn tag_language(doc: &Document) -> SpanAttribute {
    SpanAttribute::whole("lang.thai_ratio", &doc.text, thai_char_ratio(&doc.text))
}

/// A tagger named on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaggerKind {
    Language,
    C4,
    Gopher,
    Pii,
    Classify(String),
}

impl TaggerKind {
    /// Directory name of this tagger's sidecars.
    pub fn dir_name(&self) -> String {
        match self {
            TaggerKind::Language => "lang".into(),
            TaggerKind::C4 => "c4".into(),
            TaggerKind::Gopher => "gopher".into(),
            TaggerKind::Pii => "pii".into(),
            TaggerKind::Classify(name) => format!("classify-{name}"),
        }
    }

    /// Parses a comma-separated list such as `lang,gopher,classify:adult`.
    pub fn parse_list(list: &str) -> Result<Vec<TaggerKind>> {
        let mut out: Vec<TaggerKind> = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let kind: TaggerKind = item.parse()?;
            if !out.contains(&kind) {
                out.push(kind);
            }
        }
        if out.is_empty() {
            return Err(SieveError::Param("no taggers given".into()));
        }
        Ok(out)
    }
}

impl FromStr for TaggerKind {
    type Err = SieveError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lang" => TaggerKind::Language,
            "c4" => TaggerKind::C4,
            "gopher" => TaggerKind::Gopher,
            "pii" => TaggerKind::Pii,
            _ => match s.strip_prefix("classify:") {
                Some(name) if !name.is_empty() && !name.contains(['/', '\\']) => {
                    TaggerKind::Classify(name.to_string())
                }
                _ => return Err(SieveError::Param(format!("unknown tagger `{s}`"))),
            },
        })
    }
}

impl fmt::Display for TaggerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaggerKind::Language => f.write_str("lang"),
            TaggerKind::C4 => f.write_str("c4"),
            TaggerKind::Gopher => f.write_str("gopher"),
            TaggerKind::Pii => f.write_str("pii"),
            TaggerKind::Classify(n) => write!(f, "classify:{n}"),
        }
    }
}

/// Everything the taggers read: tokenizer, word lists, PII rules and any
/// trained content classifiers. Immutable and shared across workers.
#[derive(Debug, Clone)]
pub struct TagContext {
    pub tokenizer: Tokenizer,
    pub stopwords: Lexicon,
    pub naughty: Lexicon,
    pub truncation: TruncationPhrases,
    pub pii: Arc<PiiRules>,
    pub classifiers: BTreeMap<String, Arc<LinearTextModel>>,
}

impl TagContext {
    /// The bundled word lists with the given tokenizer.
    pub fn bundled(tokenizer: Tokenizer) -> Self {
        TagContext {
            tokenizer,
            stopwords: Lexicon::bundled_stopwords(),
            naughty: Lexicon::bundled_naughty(),
            truncation: TruncationPhrases::bundled(),
            pii: Arc::new(PiiRules::default()),
            classifiers: BTreeMap::new(),
        }
    }

    /// Runs one tagger over one document.
    pub fn tag(&self, kind: &TaggerKind, doc: &Document) -> Result<AttributeRecord> {
        let attrs = match kind {
            TaggerKind::Language => vec![tag_language(doc)],
            TaggerKind::C4 => tag_c4(doc, &self.naughty, &self.tokenizer),
            TaggerKind::Gopher => tag_gopher(doc, &self.tokenizer, &self.stopwords, &self.truncation),
            TaggerKind::Pii => tag_pii(doc, &self.pii),
            TaggerKind::Classify(name) => {
                let model = self.classifier(name)?;
                let p = model.predict(&doc.text, &self.tokenizer);
                vec![SpanAttribute::whole(format!("classify.{name}"), &doc.text, p)]
            }
        };
        AttributeRecord::new(doc.id.clone()).with(attrs)
    }

    pub fn classifier(&self, name: &str) -> Result<&LinearTextModel> {
        self.classifiers
            .get(name)
            .map(Arc::as_ref)
            .ok_or_else(|| SieveError::Config(format!("no classifier model configured for `{name}`")))
    }
}
