use xxhash_rust::xxh3::{xxh3_64, xxh3_64_with_seed};

use crate::thai::Tokenizer;

/// Bucket counts sorted by bucket index; zero buckets are absent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector(pub Vec<(u32, f32)>);

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: u32) -> f32 {
        self.0
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |k| self.0[k].1)
    }

    pub fn dot(&self, weights: &[f32]) -> f64 {
        self.0
            .iter()
            .map(|&(i, v)| f64::from(weights[i as usize]) * f64::from(v))
            .sum()
    }
}

/// Stable 64-bit hash of a token n-gram.
pub fn ngram_hash(token_hashes: &[u64]) -> u64 {
    let mut bytes = Vec::with_capacity(token_hashes.len() * 8);
    for h in token_hashes {
        bytes.extend_from_slice(&h.to_le_bytes());
    }
    xxh3_64_with_seed(&bytes, token_hashes.len() as u64)
}

/// Hashed bag of token n-grams (orders 1 through `ngram_max`) in `dim`
/// buckets. `dim` must be a power of two.
pub fn featurize(text: &str, tokenizer: &Tokenizer, dim: usize, ngram_max: usize) -> SparseVector {
    debug_assert!(dim.is_power_of_two());
    let mask = (dim - 1) as u64;
    let mut hashes = Vec::new();
    tokenizer.for_each_token(text, |t| hashes.push(xxh3_64(t.text.as_bytes())));

    let mut buckets: Vec<u32> = Vec::with_capacity(hashes.len() * ngram_max);
    for n in 1..=ngram_max {
        for w in hashes.windows(n) {
            buckets.push((ngram_hash(w) & mask) as u32);
        }
    }
    buckets.sort_unstable();
    let mut out: Vec<(u32, f32)> = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((i, c)) if *i == b => *c += 1.0,
            _ => out.push((b, 1.0)),
        }
    }
    SparseVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_has_no_features() {
        assert!(featurize("", &Tokenizer::Whitespace, 1 << 20, 2).is_empty());
    }

    #[test]
    fn unigrams_and_bigrams() {
        let v = featurize("a b", &Tokenizer::Whitespace, 1 << 20, 2);
        assert_eq!(v.nnz(), 3);
        assert!(v.0.iter().all(|&(_, c)| c == 1.0));
        let v1 = featurize("a b", &Tokenizer::Whitespace, 1 << 20, 1);
        assert_eq!(v1.nnz(), 2);
    }

    #[test]
    fn repeated_tokens_accumulate() {
        let v = featurize("a a a", &Tokenizer::Whitespace, 1 << 20, 1);
        assert_eq!(v.0.len(), 1);
        assert_eq!(v.0[0].1, 3.0);
    }

    #[test]
    fn deterministic_and_in_range() {
        let t = Tokenizer::Whitespace;
        let a = featurize("x y z w", &t, 16, 3);
        assert_eq!(a, featurize("x y z w", &t, 16, 3));
        assert!(a.0.iter().all(|&(i, _)| i < 16));
        assert_eq!(a.0.iter().map(|&(_, c)| c).sum::<f32>(), 4.0 + 3.0 + 2.0);
    }
}
