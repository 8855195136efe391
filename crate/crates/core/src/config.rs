//! Pipeline configuration, read from JSON. Every field has a default, so
//! `{}` is a valid config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::content::{LinearTextModel, PiiRules, PII_ATTRIBUTES};
use crate::dedup::{BloomFilter, DedupMode};
use crate::doc::ParseMode;
use crate::error::{Result, SieveError};
use crate::mixer::{PolicyConfig, StageConfig};
use crate::taggers::{GopherThresholds, Lexicon, TagContext, ThaiGate, TruncationPhrases, LANGUAGE_CUTOFF};
use crate::thai::{Tokenizer, TokenizerMode};

pub const WORKERS_ENV: &str = "SIEVE_WORKERS";
pub const PII_MASK: &str = "||||";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    /// Word list for the dictionary tokenizer; the bundled one when unset.
    pub dictionary: Option<PathBuf>,
}

/// Replacement word lists. Unset entries use the bundled lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LexiconPaths {
    pub stopwords: Option<PathBuf>,
    pub naughty: Option<PathBuf>,
    pub adult: Option<PathBuf>,
    pub gambling: Option<PathBuf>,
    pub truncation_phrases: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupConfig {
    pub mode: DedupMode,
    pub expected_items: u64,
    pub fpr: f64,
    pub salt: u64,
    pub bloom_in: Option<PathBuf>,
    pub bloom_out: Option<PathBuf>,
}

impl Default for DedupConfig {
    fn default() -> Self {
        DedupConfig {
            mode: DedupMode::Url,
            expected_items: 10_000_000,
            fpr: 0.001,
            salt: 0,
            bloom_in: None,
            bloom_out: None,
        }
    }
}

impl DedupConfig {
    /// The filter from `bloom_in`, or a fresh one sized from
    /// `expected_items` and `fpr`.
    pub fn filter(&self) -> Result<BloomFilter> {
        match &self.bloom_in {
            Some(p) => BloomFilter::load(p),
            None => BloomFilter::with_rate(self.expected_items, self.fpr, self.salt),
        }
    }
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub model: PathBuf,
    /// Documents scoring at or above this are dropped.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tokenizer: TokenizerConfig,
    pub lexicons: LexiconPaths,
    pub gopher: GopherThresholds,
    pub thai_gate: ThaiGate,
    pub language_cutoff: f64,
    pub dedup: DedupConfig,
    pub classifiers: BTreeMap<String, ClassifierConfig>,
    /// Explicit policy; [`PipelineConfig::default_policy`] when unset.
    pub policy: Option<PolicyConfig>,
    pub workers: Option<usize>,
    pub parse_mode: ParseMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tokenizer: TokenizerConfig::default(),
            lexicons: LexiconPaths::default(),
            gopher: GopherThresholds::default(),
            thai_gate: ThaiGate::default(),
            language_cutoff: LANGUAGE_CUTOFF,
            dedup: DedupConfig::default(),
            classifiers: BTreeMap::new(),
            policy: None,
            workers: None,
            parse_mode: ParseMode::Strict,
        }
    }
}

fn check_file(what: &str, p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(SieveError::Config(format!("{what} {} does not exist", p.display())))
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SieveError::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads and validates a config file. Relative paths inside it are
    /// taken as they are, relative to the working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SieveError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)
            .map_err(|e| SieveError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.tokenizer.dictionary {
            check_file("dictionary", p)?;
        }
        let l = &self.lexicons;
        for (what, p) in [
            ("stopword list", &l.stopwords),
            ("naughty-word list", &l.naughty),
            ("adult lexicon", &l.adult),
            ("gambling lexicon", &l.gambling),
            ("truncation phrase list", &l.truncation_phrases),
            ("bloom filter", &self.dedup.bloom_in),
        ] {
            if let Some(p) = p {
                check_file(what, p)?;
            }
        }
        for (name, c) in &self.classifiers {
            check_file(&format!("model for classifier `{name}`"), &c.model)?;
            if !(0.0..=1.0).contains(&c.threshold) {
                return Err(SieveError::Config(format!("classifier `{name}` threshold {} not in [0, 1]", c.threshold)));
            }
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(SieveError::Config(format!("classifier name `{name}` must be [A-Za-z0-9_-]+")));
            }
        }
        if !(0.0..=1.0).contains(&self.language_cutoff) {
            return Err(SieveError::Config(format!("language_cutoff {} not in [0, 1]", self.language_cutoff)));
        }
        if self.workers == Some(0) {
            return Err(SieveError::Config("workers must be at least 1".into()));
        }
        if self.dedup.expected_items == 0 || !(self.dedup.fpr > 0.0 && self.dedup.fpr < 1.0) {
            return Err(SieveError::Config("dedup needs expected_items >= 1 and 0 < fpr < 1".into()));
        }
        self.gopher.validate()
    }

    /// Worker count: the explicit override, then the config, then
    /// `SIEVE_WORKERS`, then 1.
    pub fn worker_count(&self, flag: Option<usize>) -> Result<usize> {
        let n = match flag.or(self.workers) {
            Some(n) => n,
            None => match std::env::var(WORKERS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| SieveError::Config(format!("{WORKERS_ENV}={v:?} is not a number")))?,
                Err(_) => 1,
            },
        };
        if n == 0 {
            return Err(SieveError::Config("workers must be at least 1".into()));
        }
        Ok(n)
    }

    pub fn tokenizer(&self) -> Result<Tokenizer> {
        Tokenizer::from_mode(self.tokenizer.mode, self.tokenizer.dictionary.as_deref())
    }

    fn lexicon(name: &str, path: &Option<PathBuf>, bundled: fn() -> Lexicon) -> Result<Lexicon> {
        match path {
            Some(p) => Lexicon::load(name, p),
            None => Ok(bundled()),
        }
    }

    pub fn adult_lexicon(&self) -> Result<Lexicon> {
        Self::lexicon("adult", &self.lexicons.adult, Lexicon::bundled_adult)
    }

    pub fn gambling_lexicon(&self) -> Result<Lexicon> {
        Self::lexicon("gambling", &self.lexicons.gambling, Lexicon::bundled_gambling)
    }

    /// Loads everything the taggers need, including classifier models.
    pub fn tag_context(&self) -> Result<TagContext> {
        let tokenizer = self.tokenizer()?;
        let mut classifiers = BTreeMap::new();
        for (name, c) in &self.classifiers {
            classifiers.insert(name.clone(), Arc::new(LinearTextModel::load(&c.model, None)?));
        }
        Ok(TagContext {
            tokenizer,
            stopwords: Self::lexicon("stopwords", &self.lexicons.stopwords, Lexicon::bundled_stopwords)?,
            naughty: Self::lexicon("naughty", &self.lexicons.naughty, Lexicon::bundled_naughty)?,
            truncation: match &self.lexicons.truncation_phrases {
                Some(p) => TruncationPhrases::load(p)?,
                None => TruncationPhrases::bundled(),
            },
            pii: Arc::new(PiiRules::default()),
            classifiers,
        })
    }

    /// Language, quality, dedup and content stages, then corrupt-Unicode
    /// removal and PII masking.
    pub fn default_policy(&self) -> PolicyConfig {
        let mut quality: Vec<String> = ["has_curly_brace", "has_lorem_ipsum", "has_javascript", "has_naughty_word"]
            .iter()
            .map(|a| format!("c4.{a} == 0"))
            .collect();
        quality.extend(self.gopher.keep_clauses(self.thai_gate));
        let mut stages = vec![
            StageConfig::drop("language", format!("lang.thai_ratio >= {}", self.language_cutoff)),
            StageConfig::drop("quality", quality.join(" and ")),
            StageConfig::drop("dedup", "dedup.url_duplicate == 0 and dedup.doc_duplicate == 0"),
        ];
        if !self.classifiers.is_empty() {
            let content: Vec<String> = self
                .classifiers
                .iter()
                .map(|(name, c)| format!("classify.{name} < {}", c.threshold))
                .collect();
            stages.push(StageConfig::drop("content", content.join(" and ")));
        }
        stages.push(StageConfig::mask("corrupt_unicode", ["c4.corrupt_unicode"], ""));
        stages.push(StageConfig::mask("pii", PII_ATTRIBUTES, PII_MASK));
        PolicyConfig { stages }
    }

    pub fn policy(&self) -> PolicyConfig {
        self.policy.clone().unwrap_or_else(|| self.default_policy())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixer::compile_policy;

    #[test]
    fn empty_object_is_the_default() {
        assert_eq!(PipelineConfig::from_json("{}").unwrap(), PipelineConfig::default());
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut cfg = PipelineConfig::default();
        cfg.gopher.min_words = 150;
        cfg.thai_gate = ThaiGate::ConsonantRatio;
        cfg.dedup.mode = DedupMode::Doc;
        cfg.dedup.fpr = 0.1 + 0.2;
        cfg.workers = Some(4);
        cfg.parse_mode = ParseMode::Lenient;
        cfg.classifiers.insert(
            "adult".into(),
            ClassifierConfig {
                model: "m.bin".into(),
                threshold: 0.7,
            },
        );
        cfg.policy = Some(cfg.default_policy());
        assert_eq!(PipelineConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_json(r#"{"gopher": {"min_word": 10}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"nope": 1}"#).is_err());
    }

    #[test]
    fn validation_catches_missing_files_and_bad_values() {
        let cfg = PipelineConfig::from_json(r#"{"tokenizer": {"dictionary": "/no/such/file"}}"#).unwrap();
        assert!(matches!(cfg.validate(), Err(SieveError::Config(_))));
        let cfg = PipelineConfig::from_json(r#"{"workers": 0}"#).unwrap();
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig::from_json(r#"{"language_cutoff": 2}"#).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_policy_compiles() {
        let mut cfg = PipelineConfig::default();
        let p = compile_policy(&cfg.default_policy()).unwrap();
        let names: Vec<&str> = p.stages().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["language", "quality", "dedup", "corrupt_unicode", "pii"]);
        cfg.classifiers.insert(
            "gambling".into(),
            ClassifierConfig {
                model: "g".into(),
                threshold: 0.5,
            },
        );
        let p = compile_policy(&cfg.default_policy()).unwrap();
        assert_eq!(p.stages()[3].name, "content");
        assert_eq!(p.stages()[0].predicate.as_ref().unwrap().source(), "lang.thai_ratio >= 0.5");
    }

    #[test]
    fn explicit_worker_count_wins() {
        let cfg = PipelineConfig {
            workers: Some(3),
            ..Default::default()
        };
        assert_eq!(cfg.worker_count(Some(5)).unwrap(), 5);
        assert_eq!(cfg.worker_count(None).unwrap(), 3);
        assert!(cfg.worker_count(Some(0)).is_err());
    }
}
