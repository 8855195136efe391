//! Corpus statistics: word-count summaries, median-word-length value
//! counts and equal-width histograms.

use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doc::{discover_shards, DocumentReader, ParseMode};
use crate::error::{Result, SieveError};
use crate::parallel::with_workers;
use crate::taggers::gopher::lower_median;
use crate::thai::Tokenizer;

pub const PERCENTILES: [u32; 7] = [10, 30, 50, 70, 90, 95, 99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    WordCount,
    MedianWordLength,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::WordCount => "word_count",
            Metric::MedianWordLength => "median_word_length",
        }
    }

    pub fn of(self, text: &str, tokenizer: &Tokenizer) -> f64 {
        match self {
            Metric::WordCount => tokenizer.count(text) as f64,
            Metric::MedianWordLength => {
                let mut lens = Vec::new();
                tokenizer.for_each_token(text, |t| lens.push(t.char_len()));
                lower_median(&lens) as f64
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = SieveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word_count" => Ok(Metric::WordCount),
            "median_word_length" => Ok(Metric::MedianWordLength),
            _ => Err(SieveError::Param(format!(
                "unknown metric `{s}` (expected word_count or median_word_length)"
            ))),
        }
    }
}

/// Linear interpolation between closest ranks: rank `p/100 * (n-1)`.
/// `sorted` must be ascending.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: u64,
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1 denominator).
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// Keyed `p10`, `p30`, ...
    pub percentiles: IndexMap<String, Option<f64>>,
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mean = (n > 0).then(|| sorted.iter().sum::<f64>() / n as f64);
    let std = mean.filter(|_| n >= 2).map(|m| {
        let ss: f64 = sorted.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Summary {
        count: n as u64,
        mean,
        std,
        min: sorted.first().copied(),
        max: sorted.last().copied(),
        percentiles: PERCENTILES
            .iter()
            .map(|&p| (format!("p{p}"), percentile(&sorted, f64::from(p))))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueCount {
    pub value: f64,
    pub count: u64,
}

/// Occurrences of each distinct value, ascending by value.
pub fn value_counts(values: &[f64]) -> Vec<ValueCount> {
    let mut m: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    for &v in values {
        // order-preserving key for non-negative and negative floats alike
        let bits = v.to_bits();
        let key = if v.is_sign_negative() { !bits } else { bits | (1 << 63) };
        m.entry(key).or_insert((v, 0)).1 += 1;
    }
    m.into_values().map(|(value, count)| ValueCount { value, count }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// `bins` equal-width bins over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<Bin>> {
    if bins == 0 {
        return Err(SieveError::Param("histogram needs at least one bin".into()));
    }
    let Some(min) = values.iter().copied().reduce(f64::min) else {
        return Ok(Vec::new());
    };
    let max = values.iter().copied().fold(min, f64::max);
    let width = (max - min) / bins as f64;
    let mut out: Vec<Bin> = (0..bins)
        .map(|i| Bin {
            lo: min + width * i as f64,
            hi: if i + 1 == bins { max } else { min + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for &v in values {
        let i = if width > 0.0 { (((v - min) / width) as usize).min(bins - 1) } else { 0 };
        out[i].count += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub metric: Metric,
    pub tokenizer: String,
    #[serde(flatten)]
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_counts: Option<Vec<ValueCount>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<Vec<Bin>>,
}

/// Metric values for every document under `dir`, in shard then line order.
pub fn collect_metric(
    dir: &Path,
    metric: Metric,
    tokenizer: &Tokenizer,
    workers: usize,
    parse_mode: ParseMode,
) -> Result<Vec<f64>> {
    let shards = discover_shards(dir)?;
    let per_shard = with_workers(workers, || {
        shards
            .par_iter()
            .map(|rel| {
                DocumentReader::open(&dir.join(rel), parse_mode)?
                    .map(|l| l.map(|l| metric.of(&l.doc.text, tokenizer)))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(per_shard.concat())
}

/// Summary for `metric`, plus value counts for median word length and a
/// histogram when `bins` is given.
pub fn corpus_stats(values: &[f64], metric: Metric, tokenizer: &Tokenizer, bins: Option<usize>) -> Result<CorpusStats> {
    Ok(CorpusStats {
        metric,
        tokenizer: tokenizer.name().to_string(),
        summary: summarize(values),
        value_counts: (metric == Metric::MedianWordLength).then(|| value_counts(values)),
        histogram: bins.map(|b| histogram(values, b)).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn five_values() {
        let s = summarize(&[3.0, 1.0, 4.0, 5.0, 2.0]);
        assert_eq!(s.count, 5);
        assert_eq!(s.mean, Some(3.0));
        assert_eq!(s.percentiles["p50"], Some(3.0));
        assert_eq!((s.min, s.max), (Some(1.0), Some(5.0)));
        assert!((s.std.unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn linear_interpolation() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 50.0), Some(2.5));
        assert_eq!(percentile(&[7.0], 99.0), Some(7.0));
        assert_eq!(percentile(&[0.0, 10.0], 95.0), Some(9.5));
    }

    #[test]
    fn empty_corpus_has_null_moments() {
        let s = summarize(&[]);
        assert_eq!(s.count, 0);
        assert!(s.mean.is_none() && s.std.is_none() && s.min.is_none() && s.max.is_none());
        assert!(s.percentiles.values().all(Option::is_none));
        let json = serde_json::to_value(&s).unwrap();
        assert!(json["mean"].is_null());
        assert!(summarize(&[1.0]).std.is_none());
    }

    #[test]
    fn counts_and_bins() {
        let v = [3.0, 2.0, 3.0, 5.0];
        let vc = value_counts(&v);
        assert_eq!(vc.iter().map(|c| (c.value, c.count)).collect::<Vec<_>>(), [(2.0, 1), (3.0, 2), (5.0, 1)]);
        let h = histogram(&[0.0, 1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), [2, 3]);
        assert_eq!((h[0].lo, h[0].hi, h[1].hi), (0.0, 2.0, 4.0));
        assert_eq!(histogram(&[5.0, 5.0], 3).unwrap()[0].count, 2);
        assert!(histogram(&v, 0).is_err());
        assert!(histogram(&[], 4).unwrap().is_empty());
    }

    #[test]
    fn metrics() {
        let t = Tokenizer::Whitespace;
        assert_eq!(Metric::WordCount.of("a bb ccc", &t), 3.0);
        assert_eq!(Metric::MedianWordLength.of("a bb ccc dddd", &t), 2.0);
        assert!("nosuch".parse::<Metric>().is_err());
    }

    proptest! {
        #[test]
        fn percentiles_are_monotone_and_bounded(mut v in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let s = summarize(&v);
            v.sort_by(f64::total_cmp);
            let ps: Vec<f64> = s.percentiles.values().map(|p| p.unwrap()).collect();
            prop_assert!(ps.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(ps[0] >= v[0] && ps[ps.len() - 1] <= v[v.len() - 1]);
        }

        #[test]
        fn histogram_counts_everything(v in proptest::collection::vec(0f64..1e4, 0..200), bins in 1usize..20) {
            let total: u64 = histogram(&v, bins).unwrap().iter().map(|b| b.count).sum();
            prop_assert_eq!(total, v.len() as u64);
        }
    }
}
