use rustc_hash::FxHashMap;

use crate::error::Result;
use crate::sequence::{key_space, reverse_key, TupleKey};

/// Key spaces up to this many entries are stored densely.
pub(crate) const DENSE_LIMIT: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Sparse(FxHashMap<TupleKey, f64>),
}

/// Real-valued table over fixed-width tuple keys.
///
/// Dense up to 2^24 keys, hash-backed above. Absent sparse keys read as zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbTable {
    width: usize,
    alphabet_size: usize,
    storage: Storage,
}

impl ProbTable {
    pub fn zeros(width: usize, alphabet_size: usize) -> Result<Self> {
        let space = key_space(alphabet_size, width)?;
        let storage = if space <= DENSE_LIMIT {
            Storage::Dense(vec![0.0; space as usize])
        } else {
            Storage::Sparse(FxHashMap::default())
        };
        Ok(Self {
            width,
            alphabet_size,
            storage,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    #[inline]
    pub fn get(&self, key: TupleKey) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v.get(key as usize).copied().unwrap_or(0.0),
            Storage::Sparse(m) => m.get(&key).copied().unwrap_or(0.0),
        }
    }

    pub fn set(&mut self, key: TupleKey, value: f64) {
        match &mut self.storage {
            Storage::Dense(v) => v[key as usize] = value,
            Storage::Sparse(m) => {
                if value == 0.0 {
                    m.remove(&key);
                } else {
                    m.insert(key, value);
                }
            }
        }
    }

    pub fn add(&mut self, key: TupleKey, value: f64) {
        match &mut self.storage {
            Storage::Dense(v) => v[key as usize] += value,
            Storage::Sparse(m) => *m.entry(key).or_insert(0.0) += value,
        }
    }

    /// Non-zero entries in ascending key order.
    pub fn nonzero(&self) -> Vec<(TupleKey, f64)> {
        match &self.storage {
            Storage::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &p)| p != 0.0)
                .map(|(k, &p)| (k as TupleKey, p))
                .collect(),
            Storage::Sparse(m) => {
                let mut out: Vec<_> = m
                    .iter()
                    .filter(|(_, &p)| p != 0.0)
                    .map(|(&k, &p)| (k, p))
                    .collect();
                out.sort_unstable_by_key(|&(k, _)| k);
                out
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        match &mut self.storage {
            Storage::Dense(v) => v.iter_mut().for_each(|p| *p *= factor),
            Storage::Sparse(m) => m.values_mut().for_each(|p| *p *= factor),
        }
    }

    /// Table with every key replaced by the key of its reversed tuple.
    pub fn reversed(&self) -> Self {
        let mut out = Self {
            width: self.width,
            alphabet_size: self.alphabet_size,
            storage: match &self.storage {
                Storage::Dense(v) => Storage::Dense(vec![0.0; v.len()]),
                Storage::Sparse(_) => Storage::Sparse(FxHashMap::default()),
            },
        };
        for (k, p) in self.nonzero() {
            out.set(reverse_key(k, self.width, self.alphabet_size), p);
        }
        out
    }

    /// Sums the last symbol out: `out[t] = Σ_s self[(t, s)]`.
    pub fn leading_marginal(&self) -> Self {
        let a = self.alphabet_size as u64;
        let mut out = Self::zeros(self.width - 1, self.alphabet_size)
            .expect("narrower key space always fits");
        for (k, p) in self.nonzero() {
            out.add(k / a, p);
        }
        out
    }

    /// Sums the first symbol out: `out[t] = Σ_s self[(s, t)]`.
    pub fn trailing_marginal(&self) -> Self {
        let inner = key_space(self.alphabet_size, self.width - 1).expect("fits");
        let mut out = Self::zeros(self.width - 1, self.alphabet_size)
            .expect("narrower key space always fits");
        for (k, p) in self.nonzero() {
            out.add(k % inner, p);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<TupleKey> = self
            .nonzero()
            .into_iter()
            .chain(other.nonzero())
            .map(|(k, _)| k)
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|k| (self.get(k) - other.get(k)).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals_of_small_table() {
        let mut t = ProbTable::zeros(2, 2).unwrap();
        t.set(0b01, 0.7);
        t.set(0b10, 0.3);
        let lead = t.leading_marginal();
        assert_eq!(lead.get(0), 0.7);
        assert_eq!(lead.get(1), 0.3);
        let trail = t.trailing_marginal();
        assert_eq!(trail.get(0), 0.3);
        assert_eq!(trail.get(1), 0.7);
        let r = t.reversed();
        assert_eq!(r.get(0b10), 0.7);
        assert_eq!(r.get(0b01), 0.3);
    }

    #[test]
    fn large_key_space_goes_sparse() {
        let mut t = ProbTable::zeros(4, 100).unwrap();
        assert!(!t.is_dense());
        t.add(12_345_678, 0.5);
        t.add(7, 0.25);
        assert_eq!(t.nonzero(), vec![(7, 0.25), (12_345_678, 0.5)]);
        t.set(7, 0.0);
        assert_eq!(t.nonzero().len(), 1);
    }
}
