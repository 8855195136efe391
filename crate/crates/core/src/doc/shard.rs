use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use super::{AttributeRecord, Document};
use crate::error::{Result, SieveError};

/// How a reader treats a line that fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// Abort on the first bad line.
    #[default]
    Strict,
    /// Skip bad lines and count them.
    Lenient,
}

#[derive(Deserialize)]
struct RawDocument {
    id: Option<String>,
    text: Option<String>,
    #[serde(default)]
    url: Option<String>,
    #[serde(default)]
    source: Option<String>,
    #[serde(default)]
    created: Option<String>,
}

fn parse_line(line: &str, line_no: usize) -> Result<Document> {
    let raw: RawDocument = serde_json::from_str(line).map_err(|e| {
        if e.is_data() {
            SieveError::Schema {
                path: None,
                line: line_no,
                message: e.to_string(),
            }
        } else {
            SieveError::Parse {
                path: None,
                line: line_no,
                message: e.to_string(),
            }
        }
    })?;
    let schema = |message: &str| SieveError::Schema {
        path: None,
        line: line_no,
        message: message.to_string(),
    };
    let id = raw.id.ok_or_else(|| schema("missing `id`"))?;
    if id.is_empty() {
        return Err(schema("empty `id`"));
    }
    let text = raw.text.ok_or_else(|| schema("missing `text`"))?;
    Ok(Document {
        id,
        text,
        url: raw.url.unwrap_or_default(),
        source: raw.source.unwrap_or_default(),
        created: raw.created.unwrap_or_default(),
    })
}

/// Parses one JSON Lines record into a [`Document`].
pub fn parse_document(line: &str) -> Result<Document> {
    parse_line(line, 1)
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Opens a shard for buffered reading, decompressing `.gz` files.
pub fn open_reader(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| SieveError::io(path, e))?;
    let inner: Box<dyn Read + Send> = if is_gzip(path) {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::with_capacity(1 << 16, inner)))
}

/// Creates a shard (and its parent directories) for writing.
pub fn open_writer(path: &Path) -> Result<Box<dyn Write + Send>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| SieveError::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| SieveError::io(path, e))?;
    let buf = BufWriter::with_capacity(1 << 16, file);
    if is_gzip(path) {
        Ok(Box::new(GzEncoder::new(buf, Compression::default())))
    } else {
        Ok(Box::new(buf))
    }
}

/// A parsed document together with the exact line it came from.
#[derive(Debug, Clone)]
pub struct ShardLine {
    pub line_no: usize,
    pub raw: String,
    pub doc: Document,
}

/// Streaming reader over a document shard.
pub struct DocumentReader {
    path: PathBuf,
    inner: Box<dyn BufRead + Send>,
    mode: ParseMode,
    line_no: usize,
    skipped: usize,
    seen: HashSet<String>,
    buf: String,
    done: bool,
}

impl DocumentReader {
    pub fn open(path: &Path, mode: ParseMode) -> Result<Self> {
        Ok(DocumentReader {
            path: path.to_path_buf(),
            inner: open_reader(path)?,
            mode,
            line_no: 0,
            skipped: 0,
            seen: HashSet::new(),
            buf: String::new(),
            done: false,
        })
    }

    /// Lines dropped so far in lenient mode.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl Iterator for DocumentReader {
    type Item = Result<ShardLine>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line_no += 1;
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.trim().is_empty() {
                        continue;
                    }
                    let parsed = parse_line(line, self.line_no).and_then(|doc| {
                        if self.seen.insert(doc.id.clone()) {
                            Ok(doc)
                        } else {
                            Err(SieveError::Schema {
                                path: None,
                                line: self.line_no,
                                message: format!("duplicate id `{}`", doc.id),
                            })
                        }
                    });
                    match parsed {
                        Ok(doc) => {
                            return Some(Ok(ShardLine {
                                line_no: self.line_no,
                                raw: line.to_string(),
                                doc,
                            }))
                        }
                        Err(e) => match self.mode {
                            ParseMode::Lenient => self.skipped += 1,
                            ParseMode::Strict => {
                                self.done = true;
                                return Some(Err(e.with_path(&self.path)));
                            }
                        },
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(SieveError::io(&self.path, e)));
                }
            }
        }
        None
    }
}

/// A fully read shard.
#[derive(Debug, Clone, Default)]
pub struct ShardContents {
    pub lines: Vec<ShardLine>,
    pub skipped: usize,
}

impl ShardContents {
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.lines.iter().map(|l| &l.doc)
    }
}

pub fn read_shard(path: &Path, mode: ParseMode) -> Result<ShardContents> {
    let mut reader = DocumentReader::open(path, mode)?;
    let lines = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok(ShardContents {
        lines,
        skipped: reader.skipped(),
    })
}

fn write_json_lines<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = open_writer(path)?;
    let io_err = |e| SieveError::io(path, e);
    for item in items {
        serde_json::to_writer(&mut out, &item).map_err(|e| SieveError::Format(e.to_string()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    drop(out);
    Ok(())
}

pub fn write_shard<'a>(path: &Path, docs: impl IntoIterator<Item = &'a Document>) -> Result<()> {
    write_json_lines(path, docs)
}

/// Writes a sidecar; every record's spans are validated first.
pub fn write_attributes<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a AttributeRecord>,
) -> Result<()> {
    let records: Vec<&AttributeRecord> = records.into_iter().collect();
    for r in &records {
        r.validate()?;
    }
    write_json_lines(path, records)
}

/// Streaming reader over an attribute sidecar.
pub struct AttributeReader {
    path: PathBuf,
    lines: std::io::Lines<Box<dyn BufRead + Send>>,
    line_no: usize,
}

impl AttributeReader {
    pub fn open(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(SieveError::MissingSidecar(path.to_path_buf()));
        }
        Ok(AttributeReader {
            path: path.to_path_buf(),
            lines: open_reader(path)?.lines(),
            line_no: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Iterator for AttributeReader {
    type Item = Result<AttributeRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(SieveError::io(&self.path, e))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let parsed = serde_json::from_str::<AttributeRecord>(&line)
                .map_err(|e| SieveError::Parse {
                    path: Some(self.path.clone()),
                    line: self.line_no,
                    message: e.to_string(),
                })
                .and_then(|r| r.validate().map(|_| r));
            return Some(parsed);
        }
    }
}

pub fn read_attributes(path: &Path) -> Result<Vec<AttributeRecord>> {
    AttributeReader::open(path)?.collect()
}

/// Lists `.jsonl` and `.jsonl.gz` files under `dir`, as paths relative to
/// it, in lexicographic order.
pub fn discover_shards(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(SieveError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).follow_links(true) {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            SieveError::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if name.ends_with(".jsonl") || name.ends_with(".jsonl.gz") {
            let rel = entry
                .path()
                .strip_prefix(dir)
                .expect("walkdir yields children of its root")
                .to_path_buf();
            out.push(rel);
        }
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::Span;

    #[test]
    fn minimal_document_defaults_optional_fields() {
        let d = parse_document(r#"{"id":"a","text":"สวัสดี"}"#).unwrap();
        assert_eq!(d.id, "a");
        assert_eq!(d.text, "สวัสดี");
        assert_eq!(d.url, "");
        assert_eq!(d.source, "");
    }

    #[test]
    fn unknown_keys_are_ignored() {
        let d = parse_document(r#"{"id":"b","text":"x","url":"http://e.com","extra":1}"#).unwrap();
        assert_eq!(d.url, "http://e.com");
    }

    #[test]
    fn missing_id_is_a_schema_error() {
        let err = parse_document(r#"{"text":"x"}"#).unwrap_err();
        assert!(matches!(err, SieveError::Schema { .. }), "{err}");
        let err = parse_document(r#"{"id":"x"}"#).unwrap_err();
        assert!(matches!(err, SieveError::Schema { .. }), "{err}");
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        let err = parse_document(r#"{"id":"a","text":"#).unwrap_err();
        assert!(matches!(err, SieveError::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn empty_file_reads_as_empty_shard() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(read_shard(&p, ParseMode::Strict).unwrap().lines.is_empty());
    }

    fn three_docs() -> Vec<Document> {
        vec![
            Document::new("1", "หนึ่ง"),
            Document::new("2", "two\nlines").with_url("http://x.org/a"),
            Document::new("3", "ab\u{FFFD}cd"),
        ]
    }

    #[test]
    fn shards_round_trip_in_order_plain_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["s.jsonl", "s.jsonl.gz"] {
            let p = dir.path().join("nested").join(name);
            let docs = three_docs();
            write_shard(&p, &docs).unwrap();
            let back = read_shard(&p, ParseMode::Strict).unwrap();
            let got: Vec<Document> = back.documents().cloned().collect();
            assert_eq!(got, docs);
        }
    }

    #[test]
    fn lenient_mode_skips_and_counts_bad_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        std::fs::write(
            &p,
            "{\"id\":\"a\",\"text\":\"x\"}\n{not json\n{\"id\":\"b\",\"text\":\"y\"}\n",
        )
        .unwrap();
        let s = read_shard(&p, ParseMode::Lenient).unwrap();
        assert_eq!(s.lines.len(), 2);
        assert_eq!(s.skipped, 1);
        let err = read_shard(&p, ParseMode::Strict).unwrap_err();
        match err {
            SieveError::Parse { path, line, .. } => {
                assert_eq!(line, 2);
                assert_eq!(path.as_deref(), Some(p.as_path()));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_ids_within_a_shard_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("dup.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n").unwrap();
        assert!(read_shard(&p, ParseMode::Strict).is_err());
    }

    #[test]
    fn attribute_records_round_trip_preserving_order() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        let mut r = AttributeRecord::new("a");
        r.attributes.insert("lang.thai_ratio".into(), vec![Span::new(0, 18, 0.9)]);
        r.attributes.insert("c4.line_count".into(), vec![Span::new(0, 18, 1.0)]);
        let mut r2 = AttributeRecord::new("b");
        r2.attributes.insert("z".into(), vec![]);
        r2.attributes.insert("a".into(), vec![Span::new(1, 2, 0.5), Span::new(4, 9, 0.25)]);
        write_attributes(&p, [&r, &r2]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"id":"a","attributes":{"lang.thai_ratio":[[0,18,0.9]],"c4.line_count":[[0,18,1.0]]}}"#
        );
        let back = read_attributes(&p).unwrap();
        assert_eq!(back, vec![r, r2.clone()]);
        assert_eq!(back[1].attributes.keys().collect::<Vec<_>>(), ["z", "a"]);
    }

    #[test]
    fn reversed_span_fails_serialization() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = AttributeRecord::new("a");
        r.attributes.insert("x".into(), vec![Span::new(5, 2, 1.0)]);
        assert!(write_attributes(&dir.path().join("x.jsonl"), [&r]).is_err());
    }

    #[test]
    fn missing_sidecar_is_reported_by_path() {
        let err = read_attributes(Path::new("/nonexistent/a.jsonl")).unwrap_err();
        assert!(matches!(err, SieveError::MissingSidecar(_)));
    }

    #[test]
    fn discovery_is_lexicographic_and_recursive() {
        let dir = tempfile::tempdir().unwrap();
        for rel in ["b.jsonl", "a/z.jsonl.gz", "a/c.jsonl", "notes.txt"] {
            let p = dir.path().join(rel);
            std::fs::create_dir_all(p.parent().unwrap()).unwrap();
            std::fs::write(&p, "").unwrap();
        }
        let found = discover_shards(dir.path()).unwrap();
        let names: Vec<String> = found.iter().map(|p| p.to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["a/c.jsonl", "a/z.jsonl.gz", "b.jsonl"]);
    }
}
