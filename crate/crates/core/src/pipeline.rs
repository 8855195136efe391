//! Directory-level drivers used by the command line: tag, dedupe, stats.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::dedup::{dedup_pass, Deduplicator};
use crate::doc::{discover_shards, write_attributes, AttributeRecord, DocumentReader, ParseMode};
use crate::error::Result;
use crate::parallel::with_workers;
use crate::taggers::{TagContext, TaggerKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TagSummary {
    pub tagger: String,
    pub directory: PathBuf,
    pub shards: u64,
    pub documents: u64,
}

/// Runs every tagger over every shard under `input`, writing one sidecar
/// directory per tagger under `output`. Shards are spread over `workers`
/// threads; each shard is read once.
pub fn tag_directory(
    input: &Path,
    output: &Path,
    taggers: &[TaggerKind],
    ctx: &TagContext,
    workers: usize,
    parse_mode: ParseMode,
) -> Result<Vec<TagSummary>> {
    for kind in taggers {
        if let TaggerKind::Classify(name) = kind {
            ctx.classifier(name)?;
        }
    }
    let shards = discover_shards(input)?;
    let counts = with_workers(workers, || {
        shards
            .par_iter()
            .map(|rel| tag_shard(input, output, rel, taggers, ctx, parse_mode))
            .collect::<Result<Vec<u64>>>()
    })??;
    let documents: u64 = counts.iter().sum();
    Ok(taggers
        .iter()
        .map(|k| TagSummary {
            tagger: k.to_string(),
            directory: output.join(k.dir_name()),
            shards: shards.len() as u64,
            documents,
        })
        .collect())
}

fn tag_shard(
    input: &Path,
    output: &Path,
    rel: &Path,
    taggers: &[TaggerKind],
    ctx: &TagContext,
    parse_mode: ParseMode,
) -> Result<u64> {
    let mut per_tagger: Vec<Vec<AttributeRecord>> = vec![Vec::new(); taggers.len()];
    for line in DocumentReader::open(&input.join(rel), parse_mode)? {
        let line = line?;
        for (kind, out) in taggers.iter().zip(&mut per_tagger) {
            out.push(ctx.tag(kind, &line.doc)?);
        }
    }
    let n = per_tagger.first().map_or(0, Vec::len) as u64;
    for (kind, records) in taggers.iter().zip(&per_tagger) {
        write_attributes(&output.join(kind.dir_name()).join(rel), records)?;
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DedupSummary {
    pub mode: String,
    pub directory: PathBuf,
    pub shards: u64,
    pub documents: u64,
    pub duplicates: u64,
    pub capacity_warnings: u64,
}

/// Sequential dedup over the shards of `input` in sorted order, writing
/// sidecars under `output/<dedup-url|dedup-doc>`.
pub fn dedupe_directory(
    input: &Path,
    output: &Path,
    dedup: &mut Deduplicator,
    parse_mode: ParseMode,
) -> Result<DedupSummary> {
    let shards = discover_shards(input)?;
    let before_docs = dedup.documents_seen();
    let before_dups = dedup.duplicates();
    let dir = output.join(dedup.mode().dir_name());
    for flags in dedup_pass(input, &shards, dedup, parse_mode)? {
        write_attributes(&dir.join(&flags.shard), &flags.records)?;
    }
    Ok(DedupSummary {
        mode: format!("{:?}", dedup.mode()).to_lowercase(),
        directory: dir,
        shards: shards.len() as u64,
        documents: dedup.documents_seen() - before_docs,
        duplicates: dedup.duplicates() - before_dups,
        capacity_warnings: dedup.capacity_warnings(),
    })
}
