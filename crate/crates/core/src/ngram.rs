//! Exact overlapping k-tuple counts.
//!
//! [`start_marginal`] and [`end_marginal`] sum an order-(k+1) table down to
//! k-tuples. They are not the k-gram counts of the sequence: the start
//! marginal misses the last k-tuple (nothing follows it) and the end marginal
//! misses the first (nothing precedes it). Their difference is therefore
//! `[t = first] - [t = last]`, which is where the forward/backward entropy gap
//! comes from.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::sequence::{
    decode_tuple, encode_tuple, key_space, reverse_key, Sequence, Symbol, TupleKey,
};

/// Window positions handled by one parallel counting task.
const CHUNK_WINDOWS: usize = 1 << 18;

/// Per-chunk counting uses a flat array when the key space is at most this.
const DENSE_COUNT_LIMIT: u64 = 1 << 16;

/// Occurrence counts of k-tuples keyed by their big-endian encoding.
///
/// `window_total` is the sum of all counts; for a table built by
/// [`count_ngrams`] it equals `N - k + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NGramTable {
    order: usize,
    alphabet_size: usize,
    counts: FxHashMap<TupleKey, u64>,
    window_total: u64,
}

impl NGramTable {
    fn from_counts(order: usize, alphabet_size: usize, counts: FxHashMap<TupleKey, u64>) -> Self {
        let window_total = counts.values().sum();
        Self {
            order,
            alphabet_size,
            counts,
            window_total,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn window_total(&self) -> u64 {
        self.window_total
    }

    /// Number of distinct tuples with a non-zero count.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn get(&self, key: TupleKey) -> u64 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn get_tuple(&self, tuple: &[Symbol]) -> u64 {
        if tuple.len() != self.order {
            return 0;
        }
        self.get(encode_tuple(tuple, self.alphabet_size))
    }

    pub fn iter(&self) -> impl Iterator<Item = (TupleKey, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }

    /// Entries in ascending key order.
    pub fn sorted(&self) -> Vec<(TupleKey, u64)> {
        let mut out: Vec<_> = self.iter().collect();
        out.sort_unstable_by_key(|&(k, _)| k);
        out
    }

    pub fn decode(&self, key: TupleKey) -> Vec<Symbol> {
        decode_tuple(key, self.order, self.alphabet_size)
    }
}

/// Counts every overlapping k-window of `seq`.
///
/// Large inputs are split into chunks counted in parallel; chunks overlap by
/// `k - 1` symbols so every window is seen exactly once.
pub fn count_ngrams(seq: &Sequence, k: usize) -> Result<NGramTable> {
    count_ngrams_chunked(seq, k, CHUNK_WINDOWS)
}

/// [`count_ngrams`] with an explicit number of windows per chunk.
pub fn count_ngrams_chunked(seq: &Sequence, k: usize, chunk_windows: usize) -> Result<NGramTable> {
    if k == 0 {
        return Err(Error::ZeroOrder);
    }
    let n = seq.len();
    if k > n {
        return Err(Error::OrderTooLarge { order: k, len: n });
    }
    let a = seq.alphabet_size();
    let space = key_space(a, k)?;
    let windows = n - k + 1;
    let chunk_windows = chunk_windows.max(1);
    let ids = seq.ids();

    let chunks: Vec<(usize, usize)> = (0..windows)
        .step_by(chunk_windows)
        .map(|lo| (lo, (lo + chunk_windows).min(windows)))
        .collect();

    let counts = if chunks.len() == 1 {
        count_chunk(&ids[..windows + k - 1], k, a, space)
    } else {
        chunks
            .par_iter()
            .map(|&(lo, hi)| count_chunk(&ids[lo..hi + k - 1], k, a, space))
            .reduce(FxHashMap::default, merge_counts)
    };
    Ok(NGramTable::from_counts(k, a, counts))
}

fn merge_counts(
    mut left: FxHashMap<TupleKey, u64>,
    right: FxHashMap<TupleKey, u64>,
) -> FxHashMap<TupleKey, u64> {
    if left.len() < right.len() {
        return merge_counts(right, left);
    }
    for (key, c) in right {
        *left.entry(key).or_insert(0) += c;
    }
    left
}

fn count_chunk(ids: &[Symbol], k: usize, a: usize, space: u64) -> FxHashMap<TupleKey, u64> {
    let a64 = a as u64;
    // Keys of the trailing k-1 symbols stay below `prefix_space`.
    let prefix_space = space / a64;
    let mut key: TupleKey = ids[..k - 1].iter().fold(0, |acc, &s| acc * a64 + s as u64);
    let rest = &ids[k - 1..];

    if space <= DENSE_COUNT_LIMIT {
        let mut dense = vec![0u64; space as usize];
        for &s in rest {
            key = (key % prefix_space) * a64 + s as u64;
            dense[key as usize] += 1;
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(k, c)| (k as TupleKey, c))
            .collect()
    } else {
        let mut counts = FxHashMap::default();
        for &s in rest {
            key = (key % prefix_space) * a64 + s as u64;
            *counts.entry(key).or_insert(0) += 1;
        }
        counts
    }
}

/// `out[t] = Σ_s table[(t, s)]`: windows that start with `t`.
pub fn start_marginal(table: &NGramTable) -> NGramTable {
    let a = table.alphabet_size as u64;
    let mut out = FxHashMap::default();
    for (key, c) in table.iter() {
        *out.entry(key / a).or_insert(0) += c;
    }
    NGramTable::from_counts(table.order.saturating_sub(1), table.alphabet_size, out)
}

/// `out[t] = Σ_s table[(s, t)]`: windows that end with `t`.
pub fn end_marginal(table: &NGramTable) -> NGramTable {
    let inner = key_space(table.alphabet_size, table.order.saturating_sub(1))
        .expect("narrower than an existing table");
    let mut out = FxHashMap::default();
    for (key, c) in table.iter() {
        *out.entry(key % inner).or_insert(0) += c;
    }
    NGramTable::from_counts(table.order.saturating_sub(1), table.alphabet_size, out)
}

/// Relabels every tuple by its reversal.
pub fn reverse_table(table: &NGramTable) -> NGramTable {
    let counts = table
        .iter()
        .map(|(key, c)| (reverse_key(key, table.order, table.alphabet_size), c))
        .collect();
    NGramTable {
        order: table.order,
        alphabet_size: table.alphabet_size,
        counts,
        window_total: table.window_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(ids: &[Symbol], a: usize) -> Sequence {
        Sequence::from_ids(ids.to_vec(), a).unwrap()
    }

    fn as_map(t: &NGramTable) -> Vec<(Vec<Symbol>, u64)> {
        t.sorted()
            .into_iter()
            .map(|(k, c)| (t.decode(k), c))
            .collect()
    }

    #[test]
    fn count_examples() {
        let t = count_ngrams(&seq(&[0, 1, 0, 1], 2), 2).unwrap();
        assert_eq!(as_map(&t), vec![(vec![0, 1], 2), (vec![1, 0], 1)]);
        assert_eq!(t.window_total(), 3);

        let t = count_ngrams(&seq(&[0, 0, 0], 1), 1).unwrap();
        assert_eq!(as_map(&t), vec![(vec![0], 3)]);

        let t = count_ngrams(&seq(&[0, 1, 2], 3), 3).unwrap();
        assert_eq!(as_map(&t), vec![(vec![0, 1, 2], 1)]);
    }

    #[test]
    fn count_errors() {
        assert!(matches!(
            count_ngrams(&seq(&[0, 1], 2), 3),
            Err(Error::OrderTooLarge { order: 3, len: 2 })
        ));
        assert!(matches!(
            count_ngrams(&seq(&[0, 1], 2), 0),
            Err(Error::ZeroOrder)
        ));
    }

    #[test]
    fn marginal_examples() {
        let s = seq(&[0, 1, 0, 1], 2);
        let t = count_ngrams(&s, 2).unwrap();
        let start = start_marginal(&t);
        assert_eq!(as_map(&start), vec![(vec![0], 2), (vec![1], 1)]);
        let end = end_marginal(&t);
        assert_eq!(as_map(&end), vec![(vec![0], 1), (vec![1], 2)]);
        let unigrams = count_ngrams(&s, 1).unwrap();
        assert_eq!(as_map(&unigrams), vec![(vec![0], 2), (vec![1], 2)]);
        assert_eq!(start.window_total(), 3);

        let s = seq(&[0, 0, 0], 1);
        let t = count_ngrams(&s, 2).unwrap();
        assert_eq!(as_map(&t), vec![(vec![0, 0], 2)]);
        assert_eq!(as_map(&start_marginal(&t)), vec![(vec![0], 2)]);
        assert_eq!(as_map(&end_marginal(&t)), vec![(vec![0], 2)]);
        assert_eq!(count_ngrams(&s, 1).unwrap().get_tuple(&[0]), 3);
    }

    #[test]
    fn order_one_table_marginalizes_to_empty_context() {
        let t = count_ngrams(&seq(&[0, 1, 1, 2], 3), 1).unwrap();
        let m = start_marginal(&t);
        assert_eq!(m.order(), 0);
        assert_eq!(m.get(0), 4);
        assert_eq!(end_marginal(&t).get(0), 4);
    }

    #[test]
    fn reverse_table_examples() {
        let s = seq(&[0, 1, 0, 1], 2);
        let t = count_ngrams(&s, 2).unwrap();
        let r = reverse_table(&t);
        assert_eq!(as_map(&r), vec![(vec![0, 1], 1), (vec![1, 0], 2)]);
        assert_eq!(r, count_ngrams(&s.reversed(), 2).unwrap());

        let s = seq(&[0; 6], 1);
        let t = count_ngrams(&s, 2).unwrap();
        assert_eq!(reverse_table(&t), t);
    }

    #[test]
    fn sparse_path_matches_dense_path() {
        // 300^2 keys forces the hash-map branch.
        let ids: Vec<Symbol> = (0..5000u32).map(|i| (i * 7919 + i / 3) % 300).collect();
        let s = seq(&ids, 300);
        let t = count_ngrams(&s, 2).unwrap();
        assert_eq!(t.window_total(), 4999);
        let mut brute = std::collections::HashMap::new();
        for w in ids.windows(2) {
            *brute.entry((w[0], w[1])).or_insert(0u64) += 1;
        }
        for ((x, y), c) in brute {
            assert_eq!(t.get_tuple(&[x, y]), c);
        }
    }

    fn arb_case() -> impl Strategy<Value = (Sequence, usize)> {
        (2usize..9, 1usize..300).prop_flat_map(|(a, n)| {
            (
                proptest::collection::vec(0..a as Symbol, n..=n),
                1usize..=n.min(5),
            )
                .prop_map(move |(ids, k)| (Sequence::from_ids(ids, a).unwrap(), k))
        })
    }

    proptest! {
        #[test]
        fn counts_match_brute_force((s, k) in arb_case()) {
            let t = count_ngrams(&s, k).unwrap();
            prop_assert_eq!(t.window_total() as usize, s.len() - k + 1);
            let mut brute = std::collections::HashMap::new();
            for w in s.ids().windows(k) {
                *brute.entry(w.to_vec()).or_insert(0u64) += 1;
            }
            prop_assert_eq!(brute.len(), t.distinct());
            for (tuple, c) in brute {
                prop_assert_eq!(t.get_tuple(&tuple), c);
            }
        }

        #[test]
        fn chunking_does_not_change_counts((s, k) in arb_case(), chunk in 1usize..40) {
            prop_assert_eq!(
                count_ngrams_chunked(&s, k, chunk).unwrap(),
                count_ngrams_chunked(&s, k, usize::MAX).unwrap()
            );
        }

        #[test]
        fn reverse_table_equals_counting_the_reverse((s, k) in arb_case()) {
            prop_assert_eq!(
                reverse_table(&count_ngrams(&s, k).unwrap()),
                count_ngrams(&s.reversed(), k).unwrap()
            );
        }

        #[test]
        fn boundary_identity((s, k) in arb_case()) {
            // marginals of the order-k table over (k-1)-tuples
            let ctx = k - 1;
            prop_assume!(s.len() > ctx);
            let t = count_ngrams(&s, k).unwrap();
            let start = start_marginal(&t);
            let end = end_marginal(&t);
            prop_assert_eq!(start.window_total() as usize, s.len() - ctx);
            let first = encode_tuple(s.first_tuple(ctx).unwrap(), s.alphabet_size());
            let last = encode_tuple(s.last_tuple(ctx).unwrap(), s.alphabet_size());
            let space = key_space(s.alphabet_size(), ctx).unwrap();
            for key in 0..space {
                let diff = start.get(key) as i64 - end.get(key) as i64;
                let expect = (key == first) as i64 - (key == last) as i64;
                prop_assert_eq!(diff, expect);
            }
        }
    }
}
