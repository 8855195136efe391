use std::io::Write;
use std::path::Path;

use xxhash_rust::xxh3::xxh3_128_with_seed;

use crate::error::{Result, SieveError};

const MAGIC: &[u8; 4] = b"BLMF";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 4 + 8 + 8;

pub const MIN_BITS: u64 = 8;
pub const MAX_HASHES: u32 = 32;

/// Standard sizing: `m = ceil(-n ln p / (ln 2)^2)`, `k = max(1, round(m/n ln 2))`.
pub fn optimal_params(expected_items: u64, fpr: f64) -> Result<(u64, u32)> {
    if expected_items == 0 {
        return Err(SieveError::Param("expected items must be at least 1".into()));
    }
    if !(fpr > 0.0 && fpr < 1.0) {
        return Err(SieveError::Param(format!("false-positive rate {fpr} is not in (0, 1)")));
    }
    let n = expected_items as f64;
    let ln2 = std::f64::consts::LN_2;
    let m = (-n * fpr.ln() / (ln2 * ln2)).ceil() as u64;
    let k = ((m as f64 / n) * ln2).round().max(1.0) as u32;
    Ok((m, k))
}

/// A Bloom filter with `k` probes derived by double hashing a 128-bit
/// digest of the key: probe `i` is `(h1 + i * h2) mod m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Vec<u64>,
    bit_count: u64,
    hash_count: u32,
    salt: u64,
    item_count: u64,
}

impl BloomFilter {
    pub fn new(bit_count: u64, hash_count: u32, salt: u64) -> Result<Self> {
        if bit_count < MIN_BITS {
            return Err(SieveError::Param(format!("bit count {bit_count} < {MIN_BITS}")));
        }
        if !(1..=MAX_HASHES).contains(&hash_count) {
            return Err(SieveError::Param(format!("hash count {hash_count} not in 1..={MAX_HASHES}")));
        }
        Ok(BloomFilter {
            bits: vec![0; bit_count.div_ceil(64) as usize],
            bit_count,
            hash_count,
            salt,
            item_count: 0,
        })
    }

    /// Sizes a filter with [`optimal_params`]; the bit count is raised to
    /// [`MIN_BITS`] and the hash count capped at [`MAX_HASHES`].
    pub fn with_rate(expected_items: u64, fpr: f64, salt: u64) -> Result<Self> {
        let (m, k) = optimal_params(expected_items, fpr)?;
        Self::new(m.max(MIN_BITS), k.min(MAX_HASHES), salt)
    }

    pub fn bit_count(&self) -> u64 {
        self.bit_count
    }

    pub fn hash_count(&self) -> u32 {
        self.hash_count
    }

    pub fn salt(&self) -> u64 {
        self.salt
    }

    /// Number of insert calls so far.
    pub fn item_count(&self) -> u64 {
        self.item_count
    }

    #[inline]
    fn digest(&self, key: &[u8]) -> (u64, u64) {
        let d = xxh3_128_with_seed(key, self.salt);
        (d as u64, (d >> 64) as u64)
    }

    #[inline]
    fn probe(&self, (h1, h2): (u64, u64), i: u32) -> u64 {
        h1.wrapping_add(u64::from(i).wrapping_mul(h2)) % self.bit_count
    }

    pub fn insert(&mut self, key: &[u8]) {
        let d = self.digest(key);
        for i in 0..self.hash_count {
            let b = self.probe(d, i);
            self.bits[(b / 64) as usize] |= 1 << (b % 64);
        }
        self.item_count += 1;
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        let d = self.digest(key);
        (0..self.hash_count).all(|i| {
            let b = self.probe(d, i);
            self.bits[(b / 64) as usize] & (1 << (b % 64)) != 0
        })
    }

    /// Inserts the key and reports whether it was (probably) present before.
    pub fn check_and_insert(&mut self, key: &[u8]) -> bool {
        let present = self.contains(key);
        self.insert(key);
        present
    }

    fn packed_len(&self) -> usize {
        self.bit_count.div_ceil(8) as usize
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.packed_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.bit_count.to_le_bytes());
        out.extend_from_slice(&self.hash_count.to_le_bytes());
        out.extend_from_slice(&self.salt.to_le_bytes());
        out.extend_from_slice(&self.item_count.to_le_bytes());
        let packed: Vec<u8> = self.bits.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.extend_from_slice(&packed[..self.packed_len()]);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fmt = |m: &str| SieveError::Format(format!("bloom filter: {m}"));
        if bytes.len() < HEADER_LEN {
            return Err(fmt("truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(fmt("bad magic"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(fmt(&format!("unsupported version {version}")));
        }
        let (m, k, salt, items) = (u64_at(8), u32_at(16), u64_at(20), u64_at(28));
        let body = &bytes[HEADER_LEN..];
        if body.len() as u64 != m.div_ceil(8) {
            return Err(fmt(&format!(
                "expected {} bytes of bits, found {}",
                m.div_ceil(8),
                body.len()
            )));
        }
        let mut filter = BloomFilter::new(m, k, salt).map_err(|e| fmt(&e.to_string()))?;
        for (word, chunk) in filter.bits.iter_mut().zip(body.chunks(8)) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            *word = u64::from_le_bytes(buf);
        }
        filter.item_count = items;
        Ok(filter)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| SieveError::io(parent, e))?;
        }
        let mut f = std::fs::File::create(path).map_err(|e| SieveError::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| SieveError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| SieveError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
