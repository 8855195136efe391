//! Applies a filter policy to document shards and their attribute
//! sidecars, writes the surviving documents and a removal report.

pub mod expr;
mod policy;

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use expr::{Aggregate, AttrKind, AttrRef, Predicate};
pub use policy::{attribute_kind, compile_policy, Action, FilterPolicy, PolicyConfig, Stage, StageConfig};

use crate::doc::{
    discover_shards, open_writer, validate_spans, AttributeReader, AttributeRecord, Document, DocumentReader,
    ParseMode, Span,
};
use crate::error::{Result, SieveError};
use crate::parallel::with_workers;
use crate::thai::Tokenizer;

pub fn count_tokens(doc: &Document, tokenizer: &Tokenizer) -> usize {
    tokenizer.count(&doc.text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub action: Action,
    pub documents_in: u64,
    pub documents_dropped: u64,
    pub tokens_in: u64,
    /// Tokens removed by this stage. For a mask stage this is the change
    /// in token count and may be negative.
    pub tokens_dropped: i64,
    pub documents_masked: u64,
    pub spans_masked: u64,
    /// For drop stages: how often each top-level clause failed among the
    /// documents this stage dropped.
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub rule_failures: IndexMap<String, u64>,
}

impl StageReport {
    fn new(stage: &Stage) -> Self {
        let rule_failures = match (&stage.action, &stage.predicate) {
            (Action::Drop, Some(p)) => p.clauses().iter().map(|(src, _)| (src.clone(), 0)).collect(),
            _ => IndexMap::new(),
        };
        StageReport {
            name: stage.name.clone(),
            action: stage.action,
            documents_in: 0,
            documents_dropped: 0,
            tokens_in: 0,
            tokens_dropped: 0,
            documents_masked: 0,
            spans_masked: 0,
            rule_failures,
        }
    }

    fn merge(&mut self, o: &StageReport) {
        self.documents_in += o.documents_in;
        self.documents_dropped += o.documents_dropped;
        self.tokens_in += o.tokens_in;
        self.tokens_dropped += o.tokens_dropped;
        self.documents_masked += o.documents_masked;
        self.spans_masked += o.spans_masked;
        for (k, v) in &o.rule_failures {
            *self.rule_failures.entry(k.clone()).or_insert(0) += v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixReport {
    pub tokenizer: String,
    pub shards: u64,
    pub documents_in: u64,
    pub documents_out: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub skipped_lines: u64,
    pub stages: Vec<StageReport>,
    pub config_sha256: String,
    pub generated_at: String,
}

impl MixReport {
    pub fn documents_dropped(&self) -> u64 {
        self.stages.iter().map(|s| s.documents_dropped).sum()
    }

    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).map_err(|e| SieveError::Format(e.to_string()))?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| SieveError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SieveError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SieveError::Format(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct MixOptions {
    pub workers: usize,
    pub parse_mode: ParseMode,
}

impl Default for MixOptions {
    fn default() -> Self {
        MixOptions {
            workers: 1,
            parse_mode: ParseMode::Strict,
        }
    }
}

/// SHA-256 of the policy and tokenizer that produced a report.
pub fn config_digest(policy: &FilterPolicy, tokenizer: &Tokenizer) -> String {
    let json = serde_json::json!({ "policy": policy.config(), "tokenizer": tokenizer.name() });
    let digest = Sha256::digest(json.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// ISO-8601 UTC timestamp; `SOURCE_DATE_EPOCH` pins it for reproducible
/// builds.
pub fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    pinned
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Text with each `(start, end, replacement)` edit applied. Edits are in
/// original byte coordinates and must not overlap.
pub fn apply_edits(text: &str, edits: &[(usize, usize, &str)]) -> String {
    let mut sorted: Vec<_> = edits.to_vec();
    sorted.sort_by_key(|e| (e.0, e.1));
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for (s, e, r) in sorted {
        out.push_str(&text[pos..s]);
        out.push_str(r);
        pos = e;
    }
    out.push_str(&text[pos..]);
    out
}

struct ShardResult {
    stages: Vec<StageReport>,
    documents_in: u64,
    documents_out: u64,
    tokens_in: u64,
    tokens_out: u64,
    skipped: u64,
}

/// Attribute lookup over the merged sidecar records of one document.
struct Attrs<'a> {
    shard: &'a Path,
    id: &'a str,
    map: HashMap<&'a str, &'a [Span]>,
}

impl Attrs<'_> {
    fn spans(&self, name: &str) -> Result<&[Span]> {
        self.map.get(name).copied().ok_or_else(|| SieveError::MissingAttribute {
            shard: self.shard.to_path_buf(),
            id: self.id.to_string(),
            name: name.to_string(),
        })
    }

    fn value(&self, r: &AttrRef) -> Result<f64> {
        let spans = self.spans(&r.name)?;
        Ok(match r.aggregate {
            Aggregate::Score => spans.first().map_or(0.0, |s| s.score),
            Aggregate::Count => spans.len() as f64,
            Aggregate::MaxScore => spans.iter().map(|s| s.score).fold(0.0, f64::max),
        })
    }
}

fn mix_shard(
    rel: &Path,
    doc_dir: &Path,
    attr_dirs: &[PathBuf],
    policy: &FilterPolicy,
    out_dir: &Path,
    tokenizer: &Tokenizer,
    parse_mode: ParseMode,
) -> Result<ShardResult> {
    let shard_path = doc_dir.join(rel);
    let mut readers = attr_dirs
        .iter()
        .map(|d| AttributeReader::open(&d.join(rel)))
        .collect::<Result<Vec<_>>>()?;
    let out_path = out_dir.join(rel);
    let mut out = open_writer(&out_path)?;
    let mut res = ShardResult {
        stages: policy.stages().iter().map(StageReport::new).collect(),
        documents_in: 0,
        documents_out: 0,
        tokens_in: 0,
        tokens_out: 0,
        skipped: 0,
    };
    let mut docs = DocumentReader::open(&shard_path, parse_mode)?;
    let mut records: Vec<AttributeRecord> = Vec::with_capacity(readers.len());
    for line in docs.by_ref() {
        let line = line?;
        records.clear();
        for r in &mut readers {
            let rec = match r.next() {
                Some(rec) => rec?,
                None => {
                    return Err(SieveError::Misaligned {
                        shard: shard_path.clone(),
                        line: line.line_no,
                        expected: line.doc.id.clone(),
                        found: format!("<end of {}>", r.path().display()),
                    })
                }
            };
            if rec.id != line.doc.id {
                return Err(SieveError::Misaligned {
                    shard: shard_path.clone(),
                    line: line.line_no,
                    expected: line.doc.id.clone(),
                    found: rec.id,
                });
            }
            records.push(rec);
        }
        let mut attrs = Attrs {
            shard: &shard_path,
            id: &line.doc.id,
            map: HashMap::new(),
        };
        for rec in &records {
            for (name, spans) in &rec.attributes {
                attrs.map.entry(name.as_str()).or_insert(spans.as_slice());
            }
        }

        let text = &line.doc.text;
        let mut tokens = tokenizer.count(text) as u64;
        res.documents_in += 1;
        res.tokens_in += tokens;

        let mut dropped = false;
        let mut edits: Vec<(usize, usize, &str)> = Vec::new();
        let mut masked_text: Option<String> = None;
        for (stage, rep) in policy.stages().iter().zip(res.stages.iter_mut()) {
            rep.documents_in += 1;
            rep.tokens_in += tokens;
            let keep = match &stage.predicate {
                Some(p) => p.eval(&mut |r| attrs.value(r))?,
                None => true,
            };
            match stage.action {
                Action::Drop => {
                    if !keep {
                        rep.documents_dropped += 1;
                        rep.tokens_dropped += tokens as i64;
                        for (src, clause) in stage.predicate.as_ref().unwrap().clauses() {
                            if !expr::eval(clause, &mut |r| attrs.value(r))? {
                                *rep.rule_failures.get_mut(src).unwrap() += 1;
                            }
                        }
                        dropped = true;
                        break;
                    }
                }
                Action::Mask => {
                    if !keep {
                        continue;
                    }
                    let mut candidates: Vec<Span> = Vec::new();
                    for name in &stage.spans {
                        let spans = attrs.spans(name)?;
                        validate_spans(spans, Some(text)).map_err(|e| {
                            SieveError::InvalidSpan(format!(
                                "{}: document `{}`, attribute `{name}`: {e}",
                                shard_path.display(),
                                line.doc.id
                            ))
                        })?;
                        candidates.extend(spans.iter().filter(|s| !s.is_empty()));
                    }
                    candidates.sort_by_key(|s| (s.start, s.end));
                    let before = edits.len();
                    for s in candidates {
                        let free = edits[..].iter().all(|&(es, ee, _)| s.end <= es || s.start >= ee);
                        if free {
                            edits.push((s.start, s.end, stage.replacement.as_str()));
                        }
                    }
                    let added = edits.len() - before;
                    if added > 0 {
                        rep.documents_masked += 1;
                        rep.spans_masked += added as u64;
                        let new_text = apply_edits(text, &edits);
                        let new_tokens = tokenizer.count(&new_text) as u64;
                        rep.tokens_dropped += tokens as i64 - new_tokens as i64;
                        tokens = new_tokens;
                        masked_text = Some(new_text);
                    }
                }
            }
        }
        if dropped {
            continue;
        }
        res.documents_out += 1;
        res.tokens_out += tokens;
        let write = |out: &mut Box<dyn Write + Send>, s: &str| {
            out.write_all(s.as_bytes())
                .and_then(|_| out.write_all(b"\n"))
                .map_err(|e| SieveError::io(&out_path, e))
        };
        match masked_text {
            None => write(&mut out, &line.raw)?,
            Some(new_text) => {
                let mut obj: serde_json::Map<String, serde_json::Value> =
                    serde_json::from_str(&line.raw).map_err(|e| SieveError::Format(e.to_string()))?;
                obj.insert("text".into(), serde_json::Value::String(new_text));
                let s = serde_json::to_string(&obj).map_err(|e| SieveError::Format(e.to_string()))?;
                write(&mut out, &s)?;
            }
        }
    }
    res.skipped = docs.skipped() as u64;
    for r in &mut readers {
        if let Some(extra) = r.next() {
            let found = extra.map(|rec| rec.id).unwrap_or_else(|e| e.to_string());
            return Err(SieveError::Misaligned {
                shard: shard_path.clone(),
                line: 0,
                expected: "<end of shard>".into(),
                found,
            });
        }
    }
    out.flush().map_err(|e| SieveError::io(&out_path, e))?;
    Ok(res)
}

/// Checks, on the first document that has sidecar records, that every
/// attribute the policy reads is present in some sidecar.
fn check_referenced(doc_dir: &Path, shards: &[PathBuf], attr_dirs: &[PathBuf], policy: &FilterPolicy) -> Result<()> {
    let wanted = policy.referenced_attributes();
    if wanted.is_empty() {
        return Ok(());
    }
    for rel in shards {
        let mut have: BTreeSet<String> = BTreeSet::new();
        let mut any = false;
        for d in attr_dirs {
            if let Some(rec) = AttributeReader::open(&d.join(rel))?.next() {
                any = true;
                have.extend(rec?.attributes.into_keys());
            }
        }
        if !any {
            continue;
        }
        let missing: Vec<&String> = wanted.iter().filter(|w| !have.contains(*w)).collect();
        if missing.is_empty() {
            return Ok(());
        }
        return Err(SieveError::Config(format!(
            "policy reads attributes not found in the given sidecars ({}): {}",
            doc_dir.join(rel).display(),
            missing.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(())
}

/// Filters every shard under `doc_dir` through `policy`, writing survivors
/// to the same relative paths under `out_dir` and `report.json` beside
/// them.
pub fn mix(
    doc_dir: &Path,
    attr_dirs: &[PathBuf],
    policy: &FilterPolicy,
    out_dir: &Path,
    tokenizer: &Tokenizer,
    options: &MixOptions,
) -> Result<MixReport> {
    let shards = discover_shards(doc_dir)?;
    check_referenced(doc_dir, &shards, attr_dirs, policy)?;
    std::fs::create_dir_all(out_dir).map_err(|e| SieveError::io(out_dir, e))?;
    let results = with_workers(options.workers, || {
        shards
            .par_iter()
            .map(|rel| mix_shard(rel, doc_dir, attr_dirs, policy, out_dir, tokenizer, options.parse_mode))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut report = MixReport {
        tokenizer: tokenizer.name().to_string(),
        shards: shards.len() as u64,
        documents_in: 0,
        documents_out: 0,
        tokens_in: 0,
        tokens_out: 0,
        skipped_lines: 0,
        stages: policy.stages().iter().map(StageReport::new).collect(),
        config_sha256: config_digest(policy, tokenizer),
        generated_at: timestamp(),
    };
    for r in &results {
        report.documents_in += r.documents_in;
        report.documents_out += r.documents_out;
        report.tokens_in += r.tokens_in;
        report.tokens_out += r.tokens_out;
        report.skipped_lines += r.skipped;
        for (total, s) in report.stages.iter_mut().zip(&r.stages) {
            total.merge(s);
        }
    }
    report.save(&out_dir.join("report.json"))?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::{read_shard, write_attributes, write_shard, SpanAttribute};

    fn ws() -> Tokenizer {
        Tokenizer::Whitespace
    }

    #[test]
    fn count_tokens_examples() {
        assert_eq!(count_tokens(&Document::new("a", ""), &ws()), 0);
        assert_eq!(count_tokens(&Document::new("a", "a b c"), &ws()), 3);
        let (a, b) = ("x y", "z");
        assert_eq!(
            ws().count(&format!("{a} {b}")),
            ws().count(a) + ws().count(b)
        );
    }

    #[test]
    fn edits_splice_in_original_coordinates() {
        assert_eq!(apply_edits("ab\u{FFFD}cd", &[(2, 5, "")]), "abcd");
        assert_eq!(apply_edits("0123456789", &[(6, 8, "Y"), (1, 3, "X")]), "0X345Y89");
        assert_eq!(apply_edits("abc", &[]), "abc");
    }

    struct Fixture {
        dir: tempfile::TempDir,
    }

    impl Fixture {
        fn new(docs: &[Document], attrs: &[(&str, Vec<Vec<SpanAttribute>>)]) -> Self {
            let dir = tempfile::tempdir().unwrap();
            write_shard(&dir.path().join("docs/a.jsonl"), docs).unwrap();
            for (sub, per_doc) in attrs {
                let recs: Vec<AttributeRecord> = docs
                    .iter()
                    .zip(per_doc)
                    .map(|(d, a)| AttributeRecord::new(d.id.clone()).with(a.clone()).unwrap())
                    .collect();
                write_attributes(&dir.path().join(sub).join("a.jsonl"), &recs).unwrap();
            }
            Fixture { dir }
        }

        fn p(&self, s: &str) -> PathBuf {
            self.dir.path().join(s)
        }

        fn run(&self, attr_dirs: &[&str], policy: &PolicyConfig) -> Result<MixReport> {
            let dirs: Vec<PathBuf> = attr_dirs.iter().map(|d| self.p(d)).collect();
            mix(
                &self.p("docs"),
                &dirs,
                &compile_policy(policy)?,
                &self.p("out"),
                &ws(),
                &MixOptions::default(),
            )
        }
    }

    fn score_docs(scores: &[f64]) -> (Vec<Document>, Vec<Vec<SpanAttribute>>) {
        let docs: Vec<Document> = scores
            .iter()
            .enumerate()
            .map(|(i, _)| Document::new(format!("d{i}"), format!("doc number {i}")))
            .collect();
        let attrs = docs
            .iter()
            .zip(scores)
            .map(|(d, &s)| vec![SpanAttribute::whole("lang.thai_ratio", &d.text, s)])
            .collect();
        (docs, attrs)
    }

    #[test]
    fn empty_policy_is_byte_identical_passthrough() {
        let (docs, _) = score_docs(&[0.1, 0.9, 0.5]);
        let fx = Fixture::new(&docs, &[]);
        let report = fx.run(&[], &PolicyConfig::default()).unwrap();
        assert_eq!(
            std::fs::read(fx.p("docs/a.jsonl")).unwrap(),
            std::fs::read(fx.p("out/a.jsonl")).unwrap()
        );
        assert_eq!(report.documents_in, 3);
        assert_eq!(report.documents_out, 3);
        assert_eq!(report.documents_dropped(), 0);
        assert!(fx.p("out/report.json").exists());
    }

    #[test]
    fn drop_stage_and_first_stage_attribution() {
        let (docs, lang) = score_docs(&[0.1, 0.9, 0.5, 0.2]);
        let fx = Fixture::new(&docs, &[("lang", lang)]);
        let policy = PolicyConfig {
            stages: vec![
                StageConfig::drop("language", "lang.thai_ratio >= 0.5"),
                StageConfig::drop("strict", "lang.thai_ratio >= 0.05"),
            ],
        };
        let r = fx.run(&["lang"], &policy).unwrap();
        let out = read_shard(&fx.p("out/a.jsonl"), ParseMode::Strict).unwrap();
        let ids: Vec<&str> = out.documents().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["d1", "d2"]);
        assert_eq!(r.stages[0].documents_dropped, 2);
        assert_eq!(r.stages[1].documents_in, 2);
        assert_eq!(r.stages[1].documents_dropped, 0);
        assert_eq!(r.stages[0].tokens_in, 12);
        assert_eq!(r.stages[0].tokens_dropped, 6);
        assert_eq!(r.stages[0].rule_failures["lang.thai_ratio >= 0.5"], 2);
        assert_eq!(r.documents_out + r.documents_dropped(), r.documents_in);
    }

    #[test]
    fn corrupt_span_is_spliced_out() {
        let docs = vec![Document::new("x", "ab\u{FFFD}cd").with_url("u")];
        let c4 = vec![vec![SpanAttribute::new("c4.corrupt_unicode", vec![Span::new(2, 5, 1.0)], "ab\u{FFFD}cd").unwrap()]];
        let fx = Fixture::new(&docs, &[("c4", c4)]);
        let policy = PolicyConfig {
            stages: vec![StageConfig::mask("corrupt", ["c4.corrupt_unicode"], "")],
        };
        let r = fx.run(&["c4"], &policy).unwrap();
        let out = read_shard(&fx.p("out/a.jsonl"), ParseMode::Strict).unwrap();
        let doc = out.documents().next().unwrap();
        assert_eq!(doc.text, "abcd");
        assert_eq!(doc.url, "u");
        assert_eq!(r.stages[0].documents_masked, 1);
        assert_eq!(r.stages[0].spans_masked, 1);
    }

    #[test]
    fn earlier_mask_stage_wins_overlaps() {
        let text = "mail a@b.co now";
        let docs = vec![Document::new("x", text)];
        let attrs = vec![vec![
            SpanAttribute::new("pii.email", vec![Span::new(5, 11, 1.0)], text).unwrap(),
            SpanAttribute::new("c4.has_curly_brace", vec![Span::new(7, 12, 1.0)], text).unwrap(),
        ]];
        let fx = Fixture::new(&docs, &[("t", attrs)]);
        let policy = PolicyConfig {
            stages: vec![
                StageConfig::mask("pii", ["pii.email"], "||||"),
                StageConfig::mask("other", ["c4.has_curly_brace"], "#"),
            ],
        };
        let r = fx.run(&["t"], &policy).unwrap();
        let out = read_shard(&fx.p("out/a.jsonl"), ParseMode::Strict).unwrap();
        assert_eq!(out.documents().next().unwrap().text, "mail |||| now");
        assert_eq!(r.stages[1].spans_masked, 0);
    }

    #[test]
    fn misalignment_names_shard_and_line() {
        let (docs, lang) = score_docs(&[0.9, 0.9]);
        let fx = Fixture::new(&docs, &[("lang", lang)]);
        let mut recs = read_shard(&fx.p("docs/a.jsonl"), ParseMode::Strict).unwrap();
        recs.lines.swap(0, 1);
        let swapped: Vec<Document> = recs.documents().cloned().collect();
        write_shard(&fx.p("docs/a.jsonl"), &swapped).unwrap();
        let policy = PolicyConfig {
            stages: vec![StageConfig::drop("language", "lang.thai_ratio >= 0.5")],
        };
        match fx.run(&["lang"], &policy) {
            Err(SieveError::Misaligned { line, expected, found, .. }) => {
                assert_eq!((line, expected.as_str(), found.as_str()), (1, "d1", "d0"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_sidecar_is_an_error() {
        let (docs, _) = score_docs(&[0.9]);
        let fx = Fixture::new(&docs, &[]);
        std::fs::create_dir_all(fx.p("lang")).unwrap();
        let policy = PolicyConfig {
            stages: vec![StageConfig::drop("language", "lang.thai_ratio >= 0.5")],
        };
        assert!(matches!(fx.run(&["lang"], &policy), Err(SieveError::MissingSidecar(_))));
    }

    #[test]
    fn absent_attribute_is_reported_before_running() {
        let (docs, lang) = score_docs(&[0.9]);
        let fx = Fixture::new(&docs, &[("lang", lang)]);
        let policy = PolicyConfig {
            stages: vec![StageConfig::drop("q", "gopher.word_count >= 1")],
        };
        match fx.run(&["lang"], &policy) {
            Err(SieveError::Config(m)) => assert!(m.contains("gopher.word_count"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn report_round_trips() {
        let (docs, lang) = score_docs(&[0.1, 0.9]);
        let fx = Fixture::new(&docs, &[("lang", lang)]);
        let policy = PolicyConfig {
            stages: vec![StageConfig::drop("language", "lang.thai_ratio >= 0.5")],
        };
        let r = fx.run(&["lang"], &policy).unwrap();
        assert_eq!(MixReport::load(&fx.p("out/report.json")).unwrap(), r);
        assert_eq!(r.config_sha256.len(), 64);
        assert_eq!(r.tokenizer, "whitespace");
    }
}
