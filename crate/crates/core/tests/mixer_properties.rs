use std::path::{Path, PathBuf};

use proptest::prelude::*;
use sieve_core::doc::{read_shard, write_attributes, write_shard, AttributeRecord, Document, ParseMode, SpanAttribute};
use sieve_core::mixer::{compile_policy, mix, MixOptions, MixReport, PolicyConfig, StageConfig};
use sieve_core::pipeline::tag_directory;
use sieve_core::taggers::{TagContext, TaggerKind};
use sieve_core::thai::Tokenizer;

const WORDS: [&str; 8] = ["ข้าว", "น้ำ", "บ้าน", "ไป", "มา", "dog", "cat", "ครับ"];

fn doc_strategy() -> impl Strategy<Value = (Vec<usize>, f64, f64)> {
    (proptest::collection::vec(0..WORDS.len(), 0..12), 0.0f64..1.0, 0.0f64..1.0)
}

fn build(root: &Path, shards: &[Vec<(Vec<usize>, f64, f64)>]) {
    for (s, docs) in shards.iter().enumerate() {
        let rel = format!("s{s:02}.jsonl");
        let docs_v: Vec<Document> = docs
            .iter()
            .enumerate()
            .map(|(i, (w, _, _))| {
                let text: Vec<&str> = w.iter().map(|&k| WORDS[k]).collect();
                Document::new(format!("{s}-{i}"), format!("{} .", text.join(" ")))
            })
            .collect();
        write_shard(&root.join("docs").join(&rel), &docs_v).unwrap();
        let recs: Vec<AttributeRecord> = docs_v
            .iter()
            .zip(docs)
            .map(|(d, (_, a, b))| {
                AttributeRecord::new(d.id.clone())
                    .with([
                        SpanAttribute::whole("lang.thai_ratio", &d.text, *a),
                        SpanAttribute::whole("classify.x", &d.text, *b),
                    ])
                    .unwrap()
            })
            .collect();
        write_attributes(&root.join("attrs").join(&rel), &recs).unwrap();
    }
}

fn run(root: &Path, out: &str, attrs: &[PathBuf], policy: &PolicyConfig) -> MixReport {
    mix(
        &root.join("docs"),
        attrs,
        &compile_policy(policy).unwrap(),
        &root.join(out),
        &Tokenizer::Whitespace,
        &MixOptions::default(),
    )
    .unwrap()
}

fn ids(dir: &Path) -> Vec<String> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    files.sort();
    files
        .iter()
        .flat_map(|f| read_shard(f, ParseMode::Strict).unwrap().lines)
        .map(|l| l.doc.id)
        .collect()
}

fn two_stage(a: &str, b: &str, first_lang: bool) -> PolicyConfig {
    let lang = StageConfig::drop("lang", format!("lang.thai_ratio >= {a}"));
    let cls = StageConfig::drop("cls", format!("classify.x < {b}"));
    PolicyConfig {
        stages: if first_lang { vec![lang, cls] } else { vec![cls, lang] },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn conservation_order_and_permutation(
        shards in proptest::collection::vec(proptest::collection::vec(doc_strategy(), 0..10), 1..4),
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
    ) {
        let t = tempfile::tempdir().unwrap();
        build(t.path(), &shards);
        let attrs = [t.path().join("attrs")];
        let (a, b) = (format!("{a:.3}"), format!("{b:.3}"));
        let r1 = run(t.path(), "o1", &attrs, &two_stage(&a, &b, true));
        let r2 = run(t.path(), "o2", &attrs, &two_stage(&a, &b, false));

        for r in [&r1, &r2] {
            prop_assert_eq!(r.documents_out + r.documents_dropped(), r.documents_in);
            for w in r.stages.windows(2) {
                prop_assert_eq!(w[1].documents_in, w[0].documents_in - w[0].documents_dropped);
                prop_assert_eq!(w[1].tokens_in as i64, w[0].tokens_in as i64 - w[0].tokens_dropped);
            }
            let last = r.stages.last().unwrap();
            prop_assert_eq!(r.tokens_out as i64, last.tokens_in as i64 - last.tokens_dropped);
        }

        // survivors keep their input order and do not depend on stage order
        let out1 = ids(&t.path().join("o1"));
        let out2 = ids(&t.path().join("o2"));
        prop_assert_eq!(&out1, &out2);
        let all = ids(&t.path().join("docs"));
        let mut it = all.iter();
        for id in &out1 {
            prop_assert!(it.any(|x| x == id));
        }
        prop_assert_eq!(r1.documents_out, r2.documents_out);
    }
}

fn thai_doc(i: usize, words: usize) -> Document {
    let body: Vec<&str> = (0..words).map(|k| WORDS[(i * 7 + k * 3) % 5]).collect();
    Document::new(format!("d{i}"), body.join(" "))
}

#[test]
fn remixing_the_output_with_fresh_attributes_drops_nothing() {
    let t = tempfile::tempdir().unwrap();
    let root = t.path();
    let docs: Vec<Document> = (0..40)
        .map(|i| if i % 3 == 0 { Document::new(format!("d{i}"), "hello world") } else { thai_doc(i, 5 + i) })
        .collect();
    write_shard(&root.join("docs/a.jsonl"), &docs).unwrap();

    let ctx = TagContext::bundled(Tokenizer::Whitespace);
    let kinds = TaggerKind::parse_list("lang,gopher").unwrap();
    let policy = compile_policy(&PolicyConfig {
        stages: vec![
            StageConfig::drop("language", "lang.thai_ratio >= 0.5"),
            StageConfig::drop("size", "gopher.word_count >= 20"),
        ],
    })
    .unwrap();
    let opts = MixOptions::default();

    tag_directory(&root.join("docs"), &root.join("attrs1"), &kinds, &ctx, 1, ParseMode::Strict).unwrap();
    let first = mix(
        &root.join("docs"),
        &[root.join("attrs1/lang"), root.join("attrs1/gopher")],
        &policy,
        &root.join("out1"),
        &ctx.tokenizer,
        &opts,
    )
    .unwrap();
    assert!(first.documents_dropped() > 0);
    std::fs::remove_file(root.join("out1/report.json")).unwrap();

    tag_directory(&root.join("out1"), &root.join("attrs2"), &kinds, &ctx, 1, ParseMode::Strict).unwrap();
    let second = mix(
        &root.join("out1"),
        &[root.join("attrs2/lang"), root.join("attrs2/gopher")],
        &policy,
        &root.join("out2"),
        &ctx.tokenizer,
        &opts,
    )
    .unwrap();
    assert_eq!(second.documents_dropped(), 0);
    assert_eq!(second.documents_in, first.documents_out);
}
