use crate::error::{Error, Result};
use crate::ngram::NGramTable;
use crate::sequence::{encode_tuple, key_space, Symbol, TupleKey, MAX_ORDER};
use crate::sum::compensated_sum;
use crate::table::ProbTable;

/// Leading and trailing marginals of a stationary joint agree to this.
pub const STATIONARITY_TOLERANCE: f64 = 1e-12;

/// A joint table sums to one within this.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Probability table over m-tuples, `m = n + 1`.
///
/// The joint is stationary when summing out the first symbol and summing out
/// the last symbol give the same (m-1)-tuple distribution, i.e. the tuple
/// probabilities do not depend on the position in the sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTupleDistribution {
    probs: ProbTable,
    stationary: bool,
    deviation: f64,
}

impl JointTupleDistribution {
    pub fn new<I>(order: usize, alphabet_size: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TupleKey, f64)>,
    {
        if order == 0 {
            return Err(Error::ZeroOrder);
        }
        if order - 1 > MAX_ORDER {
            return Err(Error::UnsupportedOrder(order - 1));
        }
        let space = key_space(alphabet_size, order)?;
        let mut probs = ProbTable::zeros(order, alphabet_size)?;
        let mut seen = rustc_hash::FxHashSet::default();
        for (key, p) in entries {
            if key >= space {
                return Err(Error::Malformed {
                    what: "joint distribution",
                    reason: format!("key {key} outside {order}-tuple key space of size {space}"),
                });
            }
            if !seen.insert(key) {
                return Err(Error::Malformed {
                    what: "joint distribution",
                    reason: format!("duplicate key {key}"),
                });
            }
            check_probability(p, || format!("joint key {key}"))?;
            probs.set(key, p);
        }
        Self::from_table(probs)
    }

    pub(crate) fn from_table(probs: ProbTable) -> Result<Self> {
        let sum = compensated_sum(probs.nonzero().into_iter().map(|(_, p)| p));
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized {
                what: "joint distribution".into(),
                sum,
            });
        }
        let deviation = probs
            .leading_marginal()
            .max_abs_diff(&probs.trailing_marginal());
        Ok(Self {
            probs,
            stationary: deviation <= STATIONARITY_TOLERANCE,
            deviation,
        })
    }

    /// Plug-in joint `count(t) / window_total` of an n-gram table.
    ///
    /// Usually not stationary: its marginals differ at the first and last
    /// tuples of the source sequence.
    pub fn empirical(table: &NGramTable) -> Result<Self> {
        let mut probs = ProbTable::zeros(table.order(), table.alphabet_size())?;
        let total = table.window_total() as f64;
        for (key, c) in table.iter() {
            probs.set(key, c as f64 / total);
        }
        Self::from_table(probs)
    }

    /// Tuple length m.
    pub fn order(&self) -> usize {
        self.probs.width()
    }

    /// Context length n = m - 1.
    pub fn context_order(&self) -> usize {
        self.probs.width() - 1
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.alphabet_size()
    }

    #[inline]
    pub fn prob(&self, key: TupleKey) -> f64 {
        self.probs.get(key)
    }

    pub fn prob_tuple(&self, tuple: &[Symbol]) -> f64 {
        debug_assert_eq!(tuple.len(), self.order());
        self.probs.get(encode_tuple(tuple, self.alphabet_size()))
    }

    pub fn table(&self) -> &ProbTable {
        &self.probs
    }

    /// Non-zero entries in ascending key order.
    pub fn entries(&self) -> Vec<(TupleKey, f64)> {
        self.probs.nonzero()
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// Largest gap between the leading and trailing marginals.
    pub fn stationarity_deviation(&self) -> f64 {
        self.deviation
    }

    /// `p(s_0..s_{n-1}) = Σ_s J(s_0..s_{n-1}, s)`.
    pub fn leading_marginal(&self) -> ProbTable {
        self.probs.leading_marginal()
    }

    /// `Σ_s J(s, s_1..s_n)`.
    pub fn trailing_marginal(&self) -> ProbTable {
        self.probs.trailing_marginal()
    }
}

pub(crate) fn check_probability(p: f64, what: impl FnOnce() -> String) -> Result<()> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            what: what(),
            value: p,
        })
    }
}

/// Relabels every tuple by its reversal: `out(s_m..s_0) = J(s_0..s_m)`.
pub fn reverse_joint(joint: &JointTupleDistribution) -> JointTupleDistribution {
    JointTupleDistribution {
        probs: joint.probs.reversed(),
        stationary: joint.stationary,
        deviation: joint.deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::count_ngrams;
    use crate::sequence::Sequence;
    use proptest::prelude::*;

    #[test]
    fn reverse_examples() {
        let j = JointTupleDistribution::new(2, 2, [(0b01, 0.7), (0b10, 0.3)]).unwrap();
        let r = reverse_joint(&j);
        assert_eq!(r.prob_tuple(&[1, 0]), 0.7);
        assert_eq!(r.prob_tuple(&[0, 1]), 0.3);
        assert!(!j.is_stationary());
        assert!(!r.is_stationary());

        let sym =
            JointTupleDistribution::new(2, 2, [(0, 0.4), (1, 0.1), (2, 0.1), (3, 0.4)]).unwrap();
        assert_eq!(reverse_joint(&sym), sym);
        assert!(sym.is_stationary());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            JointTupleDistribution::new(2, 2, [(0, 0.5)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            JointTupleDistribution::new(2, 2, [(0, 1.5), (1, -0.5)]),
            Err(Error::InvalidProbability { .. })
        ));
        assert!(matches!(
            JointTupleDistribution::new(2, 2, [(4, 1.0)]),
            Err(Error::Malformed { .. })
        ));
        assert!(matches!(
            JointTupleDistribution::new(2, 2, [(1, 0.5), (1, 0.5)]),
            Err(Error::Malformed { .. })
        ));
    }

    #[test]
    fn empirical_joint_is_stationary_only_when_ends_match() {
        let s = Sequence::from_ids(vec![0, 1, 1, 0], 2).unwrap();
        let j = JointTupleDistribution::empirical(&count_ngrams(&s, 2).unwrap()).unwrap();
        assert!(j.is_stationary());
        let s = Sequence::from_ids(vec![0, 1, 1, 1], 2).unwrap();
        let j = JointTupleDistribution::empirical(&count_ngrams(&s, 2).unwrap()).unwrap();
        assert!(!j.is_stationary());
        assert!((j.stationarity_deviation() - 1.0 / 3.0).abs() < 1e-15);
    }

    fn arb_joint() -> impl Strategy<Value = JointTupleDistribution> {
        (2usize..4, 1usize..4).prop_flat_map(|(a, m)| {
            let cells = a.pow(m as u32);
            proptest::collection::vec(0.0f64..1.0, cells).prop_map(move |w| {
                let total: f64 = w.iter().sum::<f64>().max(1e-9);
                let entries: Vec<(TupleKey, f64)> = w
                    .iter()
                    .enumerate()
                    .map(|(k, &x)| (k as TupleKey, x / total))
                    .collect();
                let table = {
                    let mut t = ProbTable::zeros(m, a).unwrap();
                    for (k, p) in &entries {
                        t.set(*k, *p);
                    }
                    t
                };
                JointTupleDistribution::from_table(table).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn reverse_is_an_involution(j in arb_joint()) {
            let r = reverse_joint(&j);
            prop_assert_eq!(r.is_stationary(), j.is_stationary());
            prop_assert_eq!(reverse_joint(&r), j.clone());
            let total = compensated_sum(r.entries().into_iter().map(|(_, p)| p));
            prop_assert!((total - 1.0).abs() <= NORMALIZATION_TOLERANCE);
        }
    }
}
