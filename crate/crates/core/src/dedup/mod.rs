//! Exact deduplication by URL and by document text through a Bloom filter.
//!
//! Only whole documents are deduplicated. Newlines are a poor paragraph
//! signal in Thai web text, so there is no paragraph-level pass.

mod bloom;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use bloom::{optimal_params, BloomFilter, MAX_HASHES, MIN_BITS};

use crate::doc::{AttributeRecord, DocumentReader, Document, ParseMode, SpanAttribute};
use crate::error::{Result, SieveError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DedupMode {
    #[default]
    Url,
    Doc,
}

impl DedupMode {
    pub fn attribute(self) -> &'static str {
        match self {
            DedupMode::Url => "dedup.url_duplicate",
            DedupMode::Doc => "dedup.doc_duplicate",
        }
    }

    /// Sidecar directory name.
    pub fn dir_name(self) -> &'static str {
        match self {
            DedupMode::Url => "dedup-url",
            DedupMode::Doc => "dedup-doc",
        }
    }
}

impl std::str::FromStr for DedupMode {
    type Err = SieveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "url" => Ok(DedupMode::Url),
            "doc" | "doc_text" => Ok(DedupMode::Doc),
            _ => Err(SieveError::Param(format!("unknown dedup mode `{s}` (expected url or doc)"))),
        }
    }
}

/// What a document is deduplicated by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DedupKey<'a> {
    Url(String),
    DocText(&'a [u8]),
}

impl<'a> DedupKey<'a> {
    /// The key for `doc`, or `None` for an empty URL in URL mode.
    pub fn of(doc: &'a Document, mode: DedupMode) -> Option<Self> {
        match mode {
            DedupMode::Url if doc.url.trim().is_empty() => None,
            DedupMode::Url => Some(DedupKey::Url(normalize_url(&doc.url))),
            DedupMode::Doc => Some(DedupKey::DocText(doc.text.as_bytes())),
        }
    }

    pub fn bytes(&self) -> &[u8] {
        match self {
            DedupKey::Url(u) => u.as_bytes(),
            DedupKey::DocText(b) => b,
        }
    }
}

/// Lowercases scheme and host and strips trailing slashes from the path.
/// Query strings and fragments are kept as they are.
pub fn normalize_url(url: &str) -> String {
    let url = url.trim();
    let (head, rest) = match url.find("://") {
        Some(i) => {
            let scheme = url[..i].to_ascii_lowercase();
            let after = &url[i + 3..];
            let host_end = after.find(['/', '?', '#']).unwrap_or(after.len());
            (
                format!("{scheme}://{}", after[..host_end].to_ascii_lowercase()),
                &after[host_end..],
            )
        }
        None => (String::new(), url),
    };
    let path_end = rest.find(['?', '#']).unwrap_or(rest.len());
    let (path, tail) = rest.split_at(path_end);
    format!("{head}{}{tail}", path.trim_end_matches('/'))
}

/// Marks first occurrences 0.0 and later occurrences 1.0, inserting keys as
/// it goes. Single writer; feed documents in corpus order.
#[derive(Debug, Clone)]
pub struct Deduplicator {
    filter: BloomFilter,
    mode: DedupMode,
    capacity: u64,
    over_capacity: u64,
    duplicates: u64,
    seen: u64,
}

impl Deduplicator {
    /// `capacity` is the item count the filter was sized for; inserts past
    /// it are counted as warnings.
    pub fn new(filter: BloomFilter, mode: DedupMode, capacity: u64) -> Self {
        Deduplicator {
            filter,
            mode,
            capacity,
            over_capacity: 0,
            duplicates: 0,
            seen: 0,
        }
    }

    pub fn mark(&mut self, doc: &Document) -> f64 {
        self.seen += 1;
        let Some(key) = DedupKey::of(doc, self.mode) else {
            return 0.0;
        };
        if self.filter.contains(key.bytes()) {
            self.duplicates += 1;
            return 1.0;
        }
        self.filter.insert(key.bytes());
        if self.filter.item_count() > self.capacity {
            self.over_capacity += 1;
        }
        0.0
    }

    pub fn record(&mut self, doc: &Document) -> AttributeRecord {
        let score = self.mark(doc);
        let mut r = AttributeRecord::new(doc.id.clone());
        r.insert(SpanAttribute::whole(self.mode.attribute(), &doc.text, score))
            .expect("fresh record");
        r
    }

    pub fn mode(&self) -> DedupMode {
        self.mode
    }

    pub fn filter(&self) -> &BloomFilter {
        &self.filter
    }

    pub fn into_filter(self) -> BloomFilter {
        self.filter
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn documents_seen(&self) -> u64 {
        self.seen
    }

    /// Inserts made after the filter passed its sized capacity.
    pub fn capacity_warnings(&self) -> u64 {
        self.over_capacity
    }
}

/// Sidecar records for one shard.
#[derive(Debug, Clone)]
pub struct ShardFlags {
    pub shard: PathBuf,
    pub records: Vec<AttributeRecord>,
}

/// Runs the deduplicator over `shards` (paths relative to `input_dir`) in
/// the order given. Callers pass them sorted lexicographically.
pub fn dedup_pass(
    input_dir: &Path,
    shards: &[PathBuf],
    dedup: &mut Deduplicator,
    parse_mode: ParseMode,
) -> Result<Vec<ShardFlags>> {
    let mut out = Vec::with_capacity(shards.len());
    for rel in shards {
        let mut records = Vec::new();
        for line in DocumentReader::open(&input_dir.join(rel), parse_mode)? {
            records.push(dedup.record(&line?.doc));
        }
        out.push(ShardFlags {
            shard: rel.clone(),
            records,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(docs: &[Document], mode: DedupMode) -> Vec<f64> {
        let mut d = Deduplicator::new(BloomFilter::with_rate(100, 0.01, 0).unwrap(), mode, 100);
        docs.iter().map(|doc| d.mark(doc)).collect()
    }

    #[test]
    fn url_duplicates_after_first() {
        let docs = [
            Document::new("1", "a").with_url("http://u1.com/x"),
            Document::new("2", "b").with_url("http://u2.com/"),
            Document::new("3", "c").with_url("HTTP://U1.COM/x/"),
        ];
        assert_eq!(flags(&docs, DedupMode::Url), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_urls_are_never_duplicates() {
        let docs = [Document::new("1", "a"), Document::new("2", "a")];
        assert_eq!(flags(&docs, DedupMode::Url), [0.0, 0.0]);
        assert_eq!(flags(&docs, DedupMode::Doc), [0.0, 1.0]);
    }

    #[test]
    fn doc_text_is_not_normalized() {
        let docs = [Document::new("1", "ข้อความ"), Document::new("2", "ข้อความ ")];
        assert_eq!(flags(&docs, DedupMode::Doc), [0.0, 0.0]);
    }

    #[test]
    fn url_normalization() {
        assert_eq!(normalize_url("HTTP://Example.COM/"), "http://example.com");
        assert_eq!(normalize_url("https://e.com/Path/?Q=1"), "https://e.com/Path?Q=1");
        assert_eq!(normalize_url("https://e.com/a#Frag"), "https://e.com/a#Frag");
        assert_eq!(normalize_url("https://E.com?x=/"), "https://e.com?x=/");
        assert_eq!(normalize_url("e.com/a/"), "e.com/a");
    }

    #[test]
    fn capacity_warnings_count_overflow() {
        let mut d = Deduplicator::new(BloomFilter::with_rate(2, 0.01, 0).unwrap(), DedupMode::Doc, 2);
        for i in 0..5 {
            d.mark(&Document::new(i.to_string(), format!("text {i}")));
        }
        assert_eq!(d.capacity_warnings(), 3);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let docs: Vec<Document> = (0..50)
            .map(|i| Document::new(i.to_string(), format!("t{}", i % 17)))
            .collect();
        assert_eq!(flags(&docs, DedupMode::Doc), flags(&docs, DedupMode::Doc));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("url".parse::<DedupMode>().unwrap(), DedupMode::Url);
        assert_eq!("doc".parse::<DedupMode>().unwrap(), DedupMode::Doc);
        assert!("para".parse::<DedupMode>().is_err());
    }
}
