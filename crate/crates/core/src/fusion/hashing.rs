use std::collections::BTreeMap;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

/// log2 of the number of hash buckets.
pub const HASH_BITS: u32 = 18;
pub const HASH_DIM: usize = 1 << HASH_BITS;
pub const NGRAM_MIN: usize = 3;
pub const NGRAM_MAX: usize = 5;

/// Sparse row with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| dense[i as usize] * v)
            .sum()
    }
}

/// Signed hashed character n-grams (n = 3..=5) of the lowercased text,
/// padded with one space on each side, L2-normalized.
pub fn hashed_char_ngrams(text: &str) -> SparseVector {
    let chars: Vec<char> = std::iter::once(' ')
        .chain(text.to_lowercase().chars())
        .chain(std::iter::once(' '))
        .collect();
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    let mut buf = String::new();
    for n in NGRAM_MIN..=NGRAM_MAX {
        for window in chars.windows(n) {
            buf.clear();
            buf.extend(window);
            let mut h = FnvHasher::default();
            h.write(buf.as_bytes());
            let h = h.finish();
            let bucket = (h & (HASH_DIM as u64 - 1)) as u32;
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            *acc.entry(bucket).or_default() += sign;
        }
    }
    acc.retain(|_, v| *v != 0.0);
    let norm = acc.values().map(|v| v * v).sum::<f64>().sqrt();
    let (indices, values) = acc
        .into_iter()
        .map(|(i, v)| (i, v / norm))
        .unzip();
    SparseVector { indices, values }
}
