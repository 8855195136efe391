use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sieve_core::config::PipelineConfig;
use sieve_core::content::{
    build_training_set, read_labeled, train_classifier, write_labeled, TrainParams, DEFAULT_DIM, DEFAULT_NGRAM_MAX,
};
use sieve_core::dedup::{DedupMode, Deduplicator};
use sieve_core::doc::{discover_shards, DocumentReader};
use sieve_core::mixer::{compile_policy, mix, MixOptions, PolicyConfig};
use sieve_core::pipeline::{dedupe_directory, tag_directory};
use sieve_core::stats::{collect_metric, corpus_stats, Metric};
use sieve_core::taggers::{Lexicon, TaggerKind};
use sieve_core::{Result, SieveError};

/// Thai web-corpus cleaning: tag, deduplicate, train content filters, mix.
#[derive(Parser)]
#[command(name = "sieve", version)]
struct Cli {
    /// Worker threads for tag, mix and stats [env: SIEVE_WORKERS]
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write attribute sidecars for each tagger
    Tag(TagArgs),
    /// Flag URL or exact-text duplicates with a Bloom filter
    Dedupe(DedupeArgs),
    /// Label documents by lexicon matches for classifier training
    Label(LabelArgs),
    /// Train a content classifier from labeled JSONL
    TrainFilter(TrainArgs),
    /// Apply a filter policy and write the cleaned corpus
    Mix(MixArgs),
    /// Print corpus statistics as JSON
    Stats(StatsArgs),
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Comma-separated: lang, c4, gopher, pii, classify:NAME
    #[arg(long)]
    taggers: String,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DedupeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sidecar root; defaults to `<input>-attributes`
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    fpr: Option<f64>,
    #[arg(long)]
    expected_items: Option<u64>,
    #[arg(long)]
    salt: Option<u64>,
    #[arg(long)]
    bloom_in: Option<PathBuf>,
    #[arg(long)]
    bloom_out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    input: PathBuf,
    /// `adult`, `gambling`, or a path to a word list
    #[arg(long)]
    lexicon: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = sieve_core::content::MIN_DISTINCT_LEXICON_WORDS)]
    min_distinct: usize,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    #[arg(long, default_value_t = DEFAULT_NGRAM_MAX)]
    ngram_max: usize,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct MixArgs {
    #[arg(long)]
    input: PathBuf,
    /// Sidecar directories, comma-separated or repeated
    #[arg(long, value_delimiter = ',')]
    attrs: Vec<PathBuf>,
    /// Policy JSON (`{"stages": [...]}`); the config's policy when omitted
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "word_count", value_parser = parse_metric)]
    metric: Metric,
    #[arg(long)]
    bins: Option<usize>,
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    s.parse().map_err(|e: SieveError| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string(v).expect("serializable"));
}

fn tag(a: TagArgs, workers: Option<usize>) -> Result<()> {
    let kinds = TaggerKind::parse_list(&a.taggers)?;
    let cfg = load_config(a.config.as_deref())?;
    let ctx = cfg.tag_context()?;
    let workers = cfg.worker_count(workers)?;
    eprintln!("tagging {} with {} ({workers} workers)", a.input.display(), a.taggers);
    for s in tag_directory(&a.input, &a.output, &kinds, &ctx, workers, cfg.parse_mode)? {
        print_json(&s);
    }
    Ok(())
}

fn dedupe(a: DedupeArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    let d = &mut cfg.dedup;
    if let Some(m) = &a.mode {
        d.mode = m.parse::<DedupMode>()?;
    }
    d.fpr = a.fpr.unwrap_or(d.fpr);
    d.expected_items = a.expected_items.unwrap_or(d.expected_items);
    d.salt = a.salt.unwrap_or(d.salt);
    if a.bloom_in.is_some() {
        d.bloom_in = a.bloom_in;
    }
    if a.bloom_out.is_some() {
        d.bloom_out = a.bloom_out;
    }
    cfg.validate()?;
    let d = &cfg.dedup;
    let filter = d.filter()?;
    let capacity = if d.bloom_in.is_some() {
        filter.item_count().max(d.expected_items)
    } else {
        d.expected_items
    };
    let output = a.output.unwrap_or_else(|| {
        let mut s = a.input.clone().into_os_string();
        s.push("-attributes");
        PathBuf::from(s)
    });
    eprintln!(
        "dedupe {} by {:?}: m={} bits, k={}",
        a.input.display(),
        d.mode,
        filter.bit_count(),
        filter.hash_count()
    );
    let mut dedup = Deduplicator::new(filter, d.mode, capacity);
    let summary = dedupe_directory(&a.input, &output, &mut dedup, cfg.parse_mode)?;
    if summary.capacity_warnings > 0 {
        eprintln!(
            "warning: {} inserts beyond the sized capacity of {capacity}; false-positive rate is above target",
            summary.capacity_warnings
        );
    }
    if let Some(p) = &d.bloom_out {
        dedup.filter().save(p)?;
    }
    print_json(&summary);
    Ok(())
}

fn label(a: LabelArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let lexicon = match a.lexicon.as_str() {
        "adult" => cfg.adult_lexicon()?,
        "gambling" => cfg.gambling_lexicon()?,
        path => Lexicon::load("custom", Path::new(path))?,
    };
    let tokenizer = cfg.tokenizer()?;
    let mut docs = Vec::new();
    for rel in discover_shards(&a.input)? {
        for line in DocumentReader::open(&a.input.join(rel), cfg.parse_mode)? {
            docs.push(line?.doc);
        }
    }
    let mut set = build_training_set(&docs, &lexicon, &tokenizer, std::iter::empty());
    if a.min_distinct != sieve_core::content::MIN_DISTINCT_LEXICON_WORDS {
        for (ex, d) in set.iter_mut().zip(&docs) {
            ex.label = sieve_core::content::label_by_lexicon(&d.text, &lexicon, a.min_distinct, &tokenizer);
        }
    }
    write_labeled(&a.out, &set)?;
    let positives = set.iter().filter(|e| e.label).count();
    print_json(&json!({ "documents": set.len(), "positives": positives, "out": a.out }));
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let tokenizer = cfg.tokenizer()?;
    let examples = read_labeled(&a.data)?;
    let params = TrainParams {
        epochs: a.epochs,
        lr: a.lr,
        seed: a.seed,
        dim: a.dim,
        ngram_max: a.ngram_max,
        ..TrainParams::default()
    };
    eprintln!("training `{}` on {} examples", a.label, examples.len());
    let (model, report) = train_classifier(&examples, &a.label, &params, &tokenizer)?;
    model.save(&a.out)?;
    print_json(&json!({
        "label": a.label,
        "examples": examples.len(),
        "epoch_losses": report.epoch_losses,
        "accuracy": report.accuracy,
        "model": a.out,
    }));
    Ok(())
}

fn run_mix(a: MixArgs, workers: Option<usize>) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let policy = match &a.policy {
        Some(p) => PolicyConfig::load(p)?,
        None => cfg.policy(),
    };
    let policy = compile_policy(&policy)?;
    let tokenizer = cfg.tokenizer()?;
    let options = MixOptions {
        workers: cfg.worker_count(workers)?,
        parse_mode: cfg.parse_mode,
    };
    eprintln!("mixing {} into {}", a.input.display(), a.output.display());
    let report = mix(&a.input, &a.attrs, &policy, &a.output, &tokenizer, &options)?;
    for s in &report.stages {
        eprintln!(
            "  {:<16} in {:>10} dropped {:>10} masked {:>8}",
            s.name, s.documents_in, s.documents_dropped, s.documents_masked
        );
    }
    print_json(&json!({
        "documents_in": report.documents_in,
        "documents_out": report.documents_out,
        "tokens_in": report.tokens_in,
        "tokens_out": report.tokens_out,
        "report": a.output.join("report.json"),
    }));
    Ok(())
}

fn stats(a: StatsArgs, workers: Option<usize>) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let tokenizer = cfg.tokenizer()?;
    let workers = cfg.worker_count(workers)?;
    let values = collect_metric(&a.input, a.metric, &tokenizer, workers, cfg.parse_mode)?;
    let out = corpus_stats(&values, a.metric, &tokenizer, a.bins)?;
    println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Tag(a) => tag(a, cli.workers),
        Command::Dedupe(a) => dedupe(a),
        Command::Label(a) => label(a),
        Command::TrainFilter(a) => train(a),
        Command::Mix(a) => run_mix(a, cli.workers),
        Command::Stats(a) => stats(a, cli.workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
