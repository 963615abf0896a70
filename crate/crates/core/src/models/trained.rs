use super::ConditionalModel;
use crate::error::{Error, Result};
use crate::ngram::{count_ngrams, start_marginal, NGramTable};
use crate::sequence::{decode_tuple, Direction, Sequence, Symbol, TupleKey, MAX_ORDER};

/// Add-k smoothed n-gram model fitted to one sequence.
///
/// `P(s | t) = (#(t s) + k) / (#(t ·) + k·A)` where `#(t ·)` counts windows
/// starting with `t`. With `k = 0` this is the plug-in maximum-likelihood
/// model and contexts never seen in training are unreachable.
#[derive(Clone, Debug)]
pub struct NGramModel {
    smoothing: f64,
    counts: NGramTable,
    contexts: NGramTable,
    direction: Direction,
}

impl NGramModel {
    /// Builds the model from an order-(n+1) count table.
    pub fn from_counts(counts: NGramTable, smoothing: f64, direction: Direction) -> Result<Self> {
        if !smoothing.is_finite() || smoothing < 0.0 {
            return Err(Error::InvalidSmoothing(smoothing));
        }
        let contexts = start_marginal(&counts);
        Ok(Self {
            smoothing,
            counts,
            contexts,
            direction,
        })
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn counts(&self) -> &NGramTable {
        &self.counts
    }

    pub fn context_counts(&self) -> &NGramTable {
        &self.contexts
    }
}

pub fn train_ngram_model(seq: &Sequence, n: usize, smoothing: f64) -> Result<NGramModel> {
    if n > MAX_ORDER {
        return Err(Error::UnsupportedOrder(n));
    }
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(Error::InvalidSmoothing(smoothing));
    }
    let counts = count_ngrams(seq, n + 1)?;
    NGramModel::from_counts(counts, smoothing, seq.orientation())
}

impl ConditionalModel for NGramModel {
    fn order(&self) -> usize {
        self.contexts.order()
    }

    fn alphabet_size(&self) -> usize {
        self.counts.alphabet_size()
    }

    fn prob(&self, context: TupleKey, next: Symbol) -> Result<f64> {
        let a = self.alphabet_size();
        if next as usize >= a {
            return Err(Error::SymbolOutOfRange {
                id: next,
                alphabet_size: a,
            });
        }
        let denominator = self.contexts.get(context) as f64 + self.smoothing * a as f64;
        if denominator <= 0.0 {
            return Err(Error::ZeroContext {
                context: decode_tuple(context, self.order(), a),
            });
        }
        let count = self.counts.get(context * a as u64 + next as u64) as f64;
        Ok((count + self.smoothing) / denominator)
    }

    fn direction(&self) -> Option<Direction> {
        Some(self.direction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s01010() -> Sequence {
        Sequence::from_ids(vec![0, 1, 0, 1, 0], 2).unwrap()
    }

    #[test]
    fn maximum_likelihood_counts() {
        let m = train_ngram_model(&s01010(), 1, 0.0).unwrap();
        assert_eq!(m.prob_tuple(&[0], 1).unwrap(), 1.0);
        assert_eq!(m.prob_tuple(&[1], 0).unwrap(), 1.0);
        assert_eq!(m.prob_tuple(&[0], 0).unwrap(), 0.0);
        assert_eq!(m.direction(), Some(Direction::Forward));
        let m = train_ngram_model(&s01010().reversed(), 1, 0.0).unwrap();
        assert_eq!(m.direction(), Some(Direction::Backward));
    }

    #[test]
    fn add_one_smoothing() {
        let m = train_ngram_model(&s01010(), 1, 1.0).unwrap();
        assert_eq!(m.prob_tuple(&[0], 1).unwrap(), 0.75);
        assert_eq!(m.prob_tuple(&[0], 0).unwrap(), 0.25);
    }

    #[test]
    fn unigram_model() {
        let s = Sequence::from_ids(vec![0, 1, 1, 2, 1], 4).unwrap();
        let m = train_ngram_model(&s, 0, 0.5).unwrap();
        assert_eq!(m.order(), 0);
        // (count + k) / (N + k·A)
        assert_eq!(m.prob_tuple(&[], 1).unwrap(), 3.5 / 7.0);
        assert_eq!(m.prob_tuple(&[], 3).unwrap(), 0.5 / 7.0);
    }

    #[test]
    fn unseen_context_without_smoothing() {
        let s = Sequence::from_ids(vec![0, 0, 0, 1], 3).unwrap();
        let m = train_ngram_model(&s, 1, 0.0).unwrap();
        assert!(matches!(
            m.prob_tuple(&[2], 0),
            Err(Error::ZeroContext { context }) if context == vec![2]
        ));
        // the final symbol is never a context either
        assert!(m.prob_tuple(&[1], 0).is_err());
        let m = train_ngram_model(&s, 1, 0.1).unwrap();
        assert!((m.prob_tuple(&[2], 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            train_ngram_model(&s01010(), 1, -1.0),
            Err(Error::InvalidSmoothing(_))
        ));
        assert!(matches!(
            train_ngram_model(&s01010(), 1, f64::NAN),
            Err(Error::InvalidSmoothing(_))
        ));
        assert!(matches!(
            train_ngram_model(&s01010(), 5, 1.0),
            Err(Error::OrderTooLarge { .. })
        ));
        assert!(matches!(
            train_ngram_model(&s01010(), 13, 1.0),
            Err(Error::UnsupportedOrder(13))
        ));
    }

    proptest! {
        #[test]
        fn rows_sum_to_one(
            ids in proptest::collection::vec(0u32..4, 2..120),
            n in 0usize..3,
            k in prop_oneof![Just(0.0), 0.01f64..5.0],
        ) {
            prop_assume!(ids.len() > n);
            let s = Sequence::from_ids(ids, 4).unwrap();
            let m = train_ngram_model(&s, n, k).unwrap();
            for ctx in 0..4u64.pow(n as u32) {
                let row: Result<Vec<f64>> = (0..4).map(|x| m.prob(ctx, x)).collect();
                if let Ok(row) = row {
                    let sum: f64 = row.iter().sum();
                    prop_assert!((sum - 1.0).abs() <= 1e-12, "row {ctx} sums to {sum}");
                }
            }
        }
    }
}
