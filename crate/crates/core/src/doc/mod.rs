//! Document and attribute records, and their JSON Lines shard form.
//!
//! Documents are never mutated by taggers. Every tagger verdict lives in an
//! [`AttributeRecord`] written to a sidecar file whose relative path mirrors
//! the document shard it describes.

mod shard;

pub use shard::{
    discover_shards, open_reader, open_writer, parse_document, read_attributes, read_shard,
    write_attributes, write_shard, AttributeReader, DocumentReader, ParseMode, ShardContents,
    ShardLine,
};

use indexmap::IndexMap;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SieveError};

/// One web page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub url: String,
    pub source: String,
    pub created: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            url: String::new(),
            source: String::new(),
            created: String::new(),
        }
    }

    pub fn with_url(mut self, url: impl Into<String>) -> Self {
        self.url = url.into();
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

/// A scored byte range `[start, end)` of a document's text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

impl Span {
    pub fn new(start: usize, end: usize, score: f64) -> Self {
        Span { start, end, score }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Serialize for Span {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.start)?;
        t.serialize_element(&self.end)?;
        t.serialize_element(&self.score)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct SpanVisitor;

        impl<'de> Visitor<'de> for SpanVisitor {
            type Value = Span;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a [start, end, score] triple")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Span, A::Error> {
                let start: usize = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let end: usize = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let score: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(2, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(4, &self));
                }
                if start > end {
                    return Err(de::Error::custom(format!("span start {start} > end {end}")));
                }
                Ok(Span { start, end, score })
            }
        }

        deserializer.deserialize_tuple(3, SpanVisitor)
    }
}

/// Checks ordering and overlap of a span list and, when the text is known,
/// that every offset is in range and on a UTF-8 character boundary.
pub fn validate_spans(spans: &[Span], text: Option<&str>) -> Result<()> {
    let mut prev_end = 0usize;
    for (i, s) in spans.iter().enumerate() {
        if s.start > s.end {
            return Err(SieveError::InvalidSpan(format!(
                "span {i}: start {} > end {}",
                s.start, s.end
            )));
        }
        if i > 0 && s.start < prev_end {
            return Err(SieveError::InvalidSpan(format!(
                "span {i} ({}..{}) overlaps or precedes the previous span ending at {prev_end}",
                s.start, s.end
            )));
        }
        if !s.score.is_finite() {
            return Err(SieveError::InvalidSpan(format!("span {i}: non-finite score")));
        }
        if let Some(text) = text {
            if s.end > text.len() {
                return Err(SieveError::InvalidSpan(format!(
                    "span {i}: end {} exceeds text length {}",
                    s.end,
                    text.len()
                )));
            }
            if !text.is_char_boundary(s.start) || !text.is_char_boundary(s.end) {
                return Err(SieveError::InvalidSpan(format!(
                    "span {i}: {}..{} is not on character boundaries",
                    s.start, s.end
                )));
            }
        }
        prev_end = s.end;
    }
    Ok(())
}

/// A named tagger verdict over one document.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanAttribute {
    pub name: String,
    pub spans: Vec<Span>,
}

impl SpanAttribute {
    /// Builds an attribute after checking its spans against `text`.
    pub fn new(name: impl Into<String>, spans: Vec<Span>, text: &str) -> Result<Self> {
        validate_spans(&spans, Some(text))?;
        Ok(SpanAttribute {
            name: name.into(),
            spans,
        })
    }

    /// A whole-document score, encoded as the single span `(0, len, score)`.
    pub fn whole(name: impl Into<String>, text: &str, score: f64) -> Self {
        SpanAttribute {
            name: name.into(),
            spans: vec![Span::new(0, text.len(), score)],
        }
    }
}

/// All attributes one tagger produced for one document, in insertion order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeRecord {
    pub id: String,
    pub attributes: IndexMap<String, Vec<Span>>,
}

impl AttributeRecord {
    pub fn new(id: impl Into<String>) -> Self {
        AttributeRecord {
            id: id.into(),
            attributes: IndexMap::new(),
        }
    }

    /// Adds an attribute; names must be unique per record.
    pub fn insert(&mut self, attr: SpanAttribute) -> Result<()> {
        if self.attributes.contains_key(&attr.name) {
            return Err(SieveError::InvalidSpan(format!(
                "duplicate attribute `{}` on record `{}`",
                attr.name, self.id
            )));
        }
        self.attributes.insert(attr.name, attr.spans);
        Ok(())
    }

    pub fn with(mut self, attrs: impl IntoIterator<Item = SpanAttribute>) -> Result<Self> {
        for a in attrs {
            self.insert(a)?;
        }
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&[Span]> {
        self.attributes.get(name).map(Vec::as_slice)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (name, spans) in &self.attributes {
            validate_spans(spans, None)
                .map_err(|e| SieveError::InvalidSpan(format!("record `{}` attribute `{name}`: {e}", self.id)))?;
        }
        Ok(())
    }
}
