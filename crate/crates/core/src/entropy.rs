//! Forward/backward conditional entropy and the boundary identity.
//!
//! For a sequence `S` of length `N` and an order-`n` model `p`,
//! `H_p(S) = -Σ_windows log p(x_n | x_0..x_{n-1})`. It is evaluated in the
//! count-weighted form `-Σ_t #(t) log p(t)` over distinct (n+1)-tuples, with
//! compensated summation in ascending key order.
//!
//! Splitting `log p(s_n | s_0..s_{n-1})` into `log J(t) - log p(s_0..s_{n-1})`
//! gives `H = H1 + H2`. `H1` is unchanged when both the sequence and the joint
//! are reversed, and the two `H2` terms differ only through the first and last
//! `n`-tuples, so for a stationary joint
//! `H_fwd - H_bwd = log p(x_first) - log p(x_last)` exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    conditional_from_joint, reverse_joint, train_ngram_model, ConditionalModel,
    JointTupleDistribution,
};
use crate::ngram::{count_ngrams, reverse_table, start_marginal, NGramTable};
use crate::sequence::{
    decode_tuple, encode_tuple, reverse_key, Direction, Sequence, Symbol, TupleKey, MAX_ORDER,
};
use crate::sum::CompensatedSum;
use crate::table::ProbTable;

/// Largest accepted `|residual|` of the identity for exact joints, in nats.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Default ΔH verdict threshold, nats per symbol.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

/// Tuples per parallel summation block. Fixed, so results do not depend on
/// the thread count.
const SUM_BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    fn per_nat(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => std::f64::consts::LOG2_E,
        }
    }

    fn factor(from: Units, to: Units) -> f64 {
        to.per_nat() / from.per_nat()
    }
}

/// What to do when an observed tuple has probability zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZeroPolicy {
    /// Fail with the offending tuple.
    #[default]
    Error,
    /// Return an infinite total and list the offending tuples.
    Report,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    pub zero_policy: ZeroPolicy,
    /// Sum sequentially in key order instead of in parallel blocks.
    pub deterministic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyReport {
    pub total_nats: f64,
    pub per_symbol_nats: f64,
    pub window_count: u64,
    pub order: usize,
    pub direction: Direction,
    pub zero_events: Vec<Vec<Symbol>>,
    /// Set when a zero-probability event made the total infinite.
    pub infinite: bool,
    pub units: Units,
}

impl EntropyReport {
    /// Copy with entropy values expressed in `units`.
    pub fn in_units(&self, units: Units) -> Self {
        let f = Units::factor(self.units, units);
        Self {
            total_nats: self.total_nats * f,
            per_symbol_nats: self.per_symbol_nats * f,
            units,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    /// `-Σ_t #(t) log J(t)` over (n+1)-tuples.
    pub h1: f64,
    /// `Σ_c #(c ·) log p(c)` over n-tuple contexts.
    pub h2: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.h1 + self.h2
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    /// Compute the residual even for non-stationary joints.
    pub report_only: bool,
    pub eval: EvalOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCheckReport {
    pub order: usize,
    #[serde(rename = "N")]
    pub length: usize,
    pub h_forward: f64,
    pub h_backward: f64,
    /// `log p(x_first) - log p(x_last)`.
    pub boundary_term: f64,
    /// `(h_forward - h_backward) - boundary_term`.
    pub residual: f64,
    /// `log(max p(t) / min p(t))` over n-tuples with positive mass.
    pub c_bound: f64,
    pub h1: f64,
    pub h2: f64,
    pub h1_rev: f64,
    pub h2_rev: f64,
    pub first_tuple: Vec<Symbol>,
    pub last_tuple: Vec<Symbol>,
    /// `(h_forward - h_backward) / N`.
    pub per_symbol_gap: f64,
    pub stationary: bool,
    pub stationarity_deviation: f64,
    pub report_only: bool,
    pub tolerance: f64,
    pub within_tolerance: bool,
    pub units: Units,
}

impl TheoremCheckReport {
    pub fn in_units(&self, units: Units) -> Self {
        let f = Units::factor(self.units, units);
        Self {
            h_forward: self.h_forward * f,
            h_backward: self.h_backward * f,
            boundary_term: self.boundary_term * f,
            residual: self.residual * f,
            c_bound: self.c_bound * f,
            h1: self.h1 * f,
            h2: self.h2 * f,
            h1_rev: self.h1_rev * f,
            h2_rev: self.h2_rev * f,
            per_symbol_gap: self.per_symbol_gap * f,
            tolerance: self.tolerance * f,
            units,
            ..self.clone()
        }
    }
}

/// Smoothing constants of the forward and backward learners.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Smoothing {
    pub forward: f64,
    pub backward: f64,
}

impl Smoothing {
    pub fn symmetric(k: f64) -> Self {
        Self {
            forward: k,
            backward: k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ForwardEasier,
    BackwardEasier,
    Indistinguishable,
}

impl Verdict {
    /// Positive ΔH means the backward model reached lower entropy.
    pub fn from_delta(delta_h: f64, threshold: f64) -> Self {
        if delta_h.abs() <= threshold {
            Verdict::Indistinguishable
        } else if delta_h > 0.0 {
            Verdict::BackwardEasier
        } else {
            Verdict::ForwardEasier
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaHReport {
    /// `(h_forward_total - h_backward_total) / N`.
    pub delta_h_per_symbol: f64,
    pub h_forward_total: f64,
    pub h_backward_total: f64,
    pub n: usize,
    #[serde(rename = "N")]
    pub length: usize,
    pub k_forward: f64,
    pub k_backward: f64,
    pub threshold: f64,
    pub direction_verdict: Verdict,
    pub units: Units,
}

impl DeltaHReport {
    pub fn in_units(&self, units: Units) -> Self {
        let f = Units::factor(self.units, units);
        Self {
            delta_h_per_symbol: self.delta_h_per_symbol * f,
            h_forward_total: self.h_forward_total * f,
            h_backward_total: self.h_backward_total * f,
            threshold: self.threshold * f,
            units,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryRow {
    pub key: TupleKey,
    pub tuple: Vec<Symbol>,
    /// `M(s_n | s_0..s_{n-1})·p(s_0..s_{n-1})`.
    pub lhs: f64,
    /// `M_rev(s_0 | s_n..s_1)·p̂(s_n..s_1)`.
    pub rhs: f64,
    pub abs_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryReport {
    pub order: usize,
    /// How the reversed model's contexts are read.
    pub convention: String,
    /// Tuples with positive joint mass that were compared.
    pub evaluated: usize,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub top_k: usize,
    /// Largest gaps first, at most `top_k`.
    pub rows: Vec<SymmetryRow>,
    pub units: Units,
}

pub const SYMMETRY_CONVENTION: &str =
    "tuple (s_0..s_n); lhs = M(s_n | s_0..s_{n-1}) * p(s_0..s_{n-1}); \
rhs = M_rev(s_0 | s_n..s_1) * p_rev(s_n..s_1), where the reversed model's context lists the \
following symbols nearest first and p_rev is the leading marginal of the key-reversed joint";

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        Err(Error::UnsupportedOrder(n))
    } else {
        Ok(())
    }
}

fn check_alphabet(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch { expected, found })
    }
}

fn check_length(seq: &Sequence, n: usize) -> Result<()> {
    if seq.len() < n + 1 {
        Err(Error::OrderTooLarge {
            order: n + 1,
            len: seq.len(),
        })
    } else {
        Ok(())
    }
}

/// Partial result of summing one block of tuples.
#[derive(Default)]
struct Partial {
    sum: CompensatedSum,
    zeros: Vec<Vec<Symbol>>,
}

fn sum_block<M: ConditionalModel + ?Sized>(
    block: &[(TupleKey, u64)],
    model: &M,
    width: usize,
    policy: ZeroPolicy,
) -> Result<Partial> {
    let a = model.alphabet_size();
    let a64 = a as u64;
    let mut out = Partial::default();
    for &(key, count) in block {
        let zero_event = match model.prob(key / a64, (key % a64) as Symbol) {
            Ok(p) if p > 0.0 => {
                out.sum.add(count as f64 * -p.ln());
                continue;
            }
            Ok(_) => Error::ZeroProbability {
                tuple: decode_tuple(key, width, a),
            },
            Err(e) => e,
        };
        match policy {
            ZeroPolicy::Error => return Err(zero_event),
            ZeroPolicy::Report => out.zeros.push(decode_tuple(key, width, a)),
        }
    }
    Ok(out)
}

/// Count-weighted entropy of the windows summarized by `counts`.
pub fn entropy_from_counts<M: ConditionalModel + ?Sized>(
    counts: &NGramTable,
    model: &M,
    opts: EvalOptions,
    direction: Direction,
) -> Result<EntropyReport> {
    let n = model.order();
    if counts.order() != n + 1 {
        return Err(Error::OrderMismatch {
            expected: n + 1,
            found: counts.order(),
        });
    }
    check_alphabet(counts.alphabet_size(), model.alphabet_size())?;
    let entries = counts.sorted();
    let width = n + 1;

    let partial = if opts.deterministic || entries.len() <= SUM_BLOCK {
        sum_block(&entries, model, width, opts.zero_policy)?
    } else {
        let blocks = entries
            .par_chunks(SUM_BLOCK)
            .map(|block| sum_block(block, model, width, opts.zero_policy))
            .collect::<Vec<_>>();
        let mut total = Partial::default();
        for block in blocks {
            let block = block?;
            total.sum.merge(&block.sum);
            total.zeros.extend(block.zeros);
        }
        total
    };

    let windows = counts.window_total();
    let infinite = !partial.zeros.is_empty();
    let total = if infinite {
        f64::INFINITY
    } else {
        partial.sum.value().max(0.0)
    };
    Ok(EntropyReport {
        total_nats: total,
        per_symbol_nats: total / windows as f64,
        window_count: windows,
        order: n,
        direction,
        zero_events: partial.zeros,
        infinite,
        units: Units::Nats,
    })
}

/// `-Σ over the N-n windows of log M(next | context)`, in nats.
pub fn conditional_entropy<M: ConditionalModel + ?Sized>(
    seq: &Sequence,
    model: &M,
    n: usize,
) -> Result<EntropyReport> {
    conditional_entropy_with(seq, model, n, EvalOptions::default())
}

pub fn conditional_entropy_with<M: ConditionalModel + ?Sized>(
    seq: &Sequence,
    model: &M,
    n: usize,
    opts: EvalOptions,
) -> Result<EntropyReport> {
    if model.order() != n {
        return Err(Error::OrderMismatch {
            expected: n,
            found: model.order(),
        });
    }
    check_order(n)?;
    check_alphabet(seq.alphabet_size(), model.alphabet_size())?;
    check_length(seq, n)?;
    let counts = count_ngrams(seq, n + 1)?;
    entropy_from_counts(&counts, model, opts, seq.orientation())
}

fn decompose_counts(counts: &NGramTable, joint: &JointTupleDistribution) -> Result<Decomposition> {
    let a = joint.alphabet_size();
    let mut h1 = CompensatedSum::new();
    for (key, c) in counts.sorted() {
        let p = joint.prob(key);
        if p <= 0.0 {
            return Err(Error::ZeroProbability {
                tuple: decode_tuple(key, counts.order(), a),
            });
        }
        h1.add(-(c as f64) * p.ln());
    }
    let contexts = start_marginal(counts);
    let marginal = joint.leading_marginal();
    let mut h2 = CompensatedSum::new();
    for (key, c) in contexts.sorted() {
        let p = marginal.get(key);
        if p <= 0.0 {
            return Err(Error::ZeroProbability {
                tuple: decode_tuple(key, contexts.order(), a),
            });
        }
        h2.add(c as f64 * p.ln());
    }
    Ok(Decomposition {
        h1: h1.value(),
        h2: h2.value(),
    })
}

/// Splits the entropy of `seq` under the conditionals of `joint` into H1 + H2.
pub fn decompose_entropy(seq: &Sequence, joint: &JointTupleDistribution) -> Result<Decomposition> {
    check_alphabet(seq.alphabet_size(), joint.alphabet_size())?;
    check_length(seq, joint.context_order())?;
    let counts = count_ngrams(seq, joint.order())?;
    decompose_counts(&counts, joint)
}

/// Marginal used for the boundary term: the mean of the leading and trailing
/// marginals. Both coincide for stationary joints; for plug-in joints the mean
/// is positive at both end tuples.
fn boundary_marginal(joint: &JointTupleDistribution) -> Result<ProbTable> {
    let mut m = ProbTable::zeros(joint.context_order(), joint.alphabet_size())?;
    for table in [joint.leading_marginal(), joint.trailing_marginal()] {
        for (key, p) in table.nonzero() {
            m.add(key, 0.5 * p);
        }
    }
    Ok(m)
}

/// Checks `H_fwd - H_bwd = log p(x_first) - log p(x_last)` for `seq` under
/// the exact conditionals of `joint` and of its reversal.
///
/// Non-stationary joints are refused unless `report_only` is set.
pub fn theorem_check(
    seq: &Sequence,
    joint: &JointTupleDistribution,
    opts: CheckOptions,
) -> Result<TheoremCheckReport> {
    if !joint.is_stationary() && !opts.report_only {
        return Err(Error::NotStationary {
            deviation: joint.stationarity_deviation(),
        });
    }
    let n = joint.context_order();
    let a = joint.alphabet_size();
    check_order(n)?;
    check_alphabet(seq.alphabet_size(), a)?;
    check_length(seq, n)?;

    let counts = count_ngrams(seq, n + 1)?;
    let reversed_counts = reverse_table(&counts);
    let reversed_joint = reverse_joint(joint);
    let forward_model = conditional_from_joint(joint);
    let backward_model = conditional_from_joint(&reversed_joint);
    let orientation = seq.orientation();

    let forward = entropy_from_counts(&counts, &forward_model, opts.eval, orientation)?;
    let backward = entropy_from_counts(
        &reversed_counts,
        &backward_model,
        opts.eval,
        orientation.flipped(),
    )?;
    let parts = decompose_counts(&counts, joint)?;
    let parts_rev = decompose_counts(&reversed_counts, &reversed_joint)?;

    let first = seq.first_tuple(n)?.to_vec();
    let last = seq.last_tuple(n)?.to_vec();
    let marginal = boundary_marginal(joint)?;
    let log_marginal = |tuple: &[Symbol]| -> Result<f64> {
        let p = marginal.get(encode_tuple(tuple, a));
        if p > 0.0 {
            Ok(p.ln())
        } else {
            Err(Error::ZeroProbability {
                tuple: tuple.to_vec(),
            })
        }
    };
    let boundary_term = if first == last {
        0.0
    } else {
        log_marginal(&first)? - log_marginal(&last)?
    };
    let (min, max) = marginal
        .nonzero()
        .into_iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (_, p)| {
            (lo.min(p), hi.max(p))
        });
    let c_bound = max.ln() - min.ln();

    let gap = forward.total_nats - backward.total_nats;
    let residual = gap - boundary_term;
    Ok(TheoremCheckReport {
        order: n,
        length: seq.len(),
        h_forward: forward.total_nats,
        h_backward: backward.total_nats,
        boundary_term,
        residual,
        c_bound,
        h1: parts.h1,
        h2: parts.h2,
        h1_rev: parts_rev.h1,
        h2_rev: parts_rev.h2,
        first_tuple: first,
        last_tuple: last,
        per_symbol_gap: gap / seq.len() as f64,
        stationary: joint.is_stationary(),
        stationarity_deviation: joint.stationarity_deviation(),
        report_only: opts.report_only,
        tolerance: RESIDUAL_TOLERANCE,
        within_tolerance: residual.abs() <= RESIDUAL_TOLERANCE,
        units: Units::Nats,
    })
}

/// Learnability gap between add-k n-gram models trained forwards and backwards.
pub fn delta_h(
    seq: &Sequence,
    n: usize,
    smoothing: Smoothing,
    threshold: f64,
) -> Result<DeltaHReport> {
    delta_h_with(seq, n, smoothing, threshold, EvalOptions::default())
}

pub fn delta_h_with(
    seq: &Sequence,
    n: usize,
    smoothing: Smoothing,
    threshold: f64,
    opts: EvalOptions,
) -> Result<DeltaHReport> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidThreshold(threshold));
    }
    check_order(n)?;
    check_length(seq, n)?;
    let reversed = seq.reversed();
    let forward_model = train_ngram_model(seq, n, smoothing.forward)?;
    let backward_model = train_ngram_model(&reversed, n, smoothing.backward)?;
    let forward = conditional_entropy_with(seq, &forward_model, n, opts)?;
    let backward = conditional_entropy_with(&reversed, &backward_model, n, opts)?;
    let delta = (forward.total_nats - backward.total_nats) / seq.len() as f64;
    Ok(DeltaHReport {
        delta_h_per_symbol: delta,
        h_forward_total: forward.total_nats,
        h_backward_total: backward.total_nats,
        n,
        length: seq.len(),
        k_forward: smoothing.forward,
        k_backward: smoothing.backward,
        threshold,
        direction_verdict: Verdict::from_delta(delta, threshold),
        units: Units::Nats,
    })
}

/// Compares `M·p` with `M_rev·p̂` on every (n+1)-tuple with positive mass.
///
/// Tuples where the two sides differ are the ones on which the forward and
/// backward models disagree about the joint.
pub fn symmetry_check<F, B>(
    forward: &F,
    backward: &B,
    joint: &JointTupleDistribution,
    top_k: usize,
) -> Result<SymmetryReport>
where
    F: ConditionalModel + ?Sized,
    B: ConditionalModel + ?Sized,
{
    let n = forward.order();
    if backward.order() != n {
        return Err(Error::OrderMismatch {
            expected: n,
            found: backward.order(),
        });
    }
    if joint.context_order() != n {
        return Err(Error::OrderMismatch {
            expected: n + 1,
            found: joint.order(),
        });
    }
    let a = joint.alphabet_size();
    check_alphabet(a, forward.alphabet_size())?;
    check_alphabet(a, backward.alphabet_size())?;
    let a64 = a as u64;

    let marginal = joint.leading_marginal();
    let reversed_marginal = reverse_joint(joint).leading_marginal();
    let mut rows = Vec::new();
    for (key, _) in joint.entries() {
        let context = key / a64;
        let lhs = forward.prob(context, (key % a64) as Symbol)? * marginal.get(context);
        let reversed = reverse_key(key, n + 1, a);
        let reversed_context = reversed / a64;
        let rhs = backward.prob(reversed_context, (reversed % a64) as Symbol)?
            * reversed_marginal.get(reversed_context);
        rows.push(SymmetryRow {
            key,
            tuple: decode_tuple(key, n + 1, a),
            lhs,
            rhs,
            abs_gap: (lhs - rhs).abs(),
        });
    }
    let evaluated = rows.len();
    let max_gap = rows.iter().map(|r| r.abs_gap).fold(0.0, f64::max);
    let mean_gap = if evaluated == 0 {
        0.0
    } else {
        rows.iter()
            .map(|r| r.abs_gap)
            .sum::<CompensatedSum>()
            .value()
            / evaluated as f64
    };
    rows.sort_by(|x, y| y.abs_gap.total_cmp(&x.abs_gap).then(x.key.cmp(&y.key)));
    rows.truncate(top_k);
    Ok(SymmetryReport {
        order: n,
        convention: SYMMETRY_CONVENTION.to_string(),
        evaluated,
        max_gap,
        mean_gap,
        top_k,
        rows,
        units: Units::Nats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{train_ngram_model, UniformModel};
    use crate::synth::{
        generate_markov, joint_tuple_distribution, make_reversible_chain, stationary_distribution,
        TransitionMatrix,
    };
    use approx::assert_relative_eq;

    /// Window-by-window evaluation, independent of the count tables.
    fn naive_entropy<M: ConditionalModel>(seq: &Sequence, model: &M) -> f64 {
        let n = model.order();
        let ids = seq.ids();
        (0..ids.len() - n)
            .map(|i| -model.prob_tuple(&ids[i..i + n], ids[i + n]).unwrap().ln())
            .sum()
    }

    fn two_state() -> (TransitionMatrix, Vec<f64>) {
        let p = TransitionMatrix::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        (p, pi)
    }

    #[test]
    fn uniform_model_entropy() {
        let ids: Vec<Symbol> = (0..101).map(|i| (i * 7 % 4) as Symbol).collect();
        let s = Sequence::from_ids(ids, 4).unwrap();
        let r = conditional_entropy(&s, &UniformModel::new(1, 4).unwrap(), 1).unwrap();
        assert_relative_eq!(r.total_nats, 100.0 * 4f64.ln(), max_relative = 1e-14);
        assert_eq!(r.window_count, 100);
        assert_relative_eq!(
            r.per_symbol_nats * 100.0,
            r.total_nats,
            max_relative = 1e-12
        );
        let bits = r.in_units(Units::Bits);
        assert_relative_eq!(bits.total_nats, 200.0, max_relative = 1e-14);
    }

    #[test]
    fn deterministic_model_has_zero_entropy() {
        let cycle =
            JointTupleDistribution::new(2, 3, [(1, 1.0 / 3.0), (5, 1.0 / 3.0), (6, 1.0 / 3.0)])
                .unwrap();
        let m = conditional_from_joint(&cycle);
        let s = Sequence::from_ids((0..30).map(|i| i % 3).collect(), 3).unwrap();
        assert_eq!(conditional_entropy(&s, &m, 1).unwrap().total_nats, 0.0);

        let s = Sequence::from_ids(vec![0, 1, 0, 1, 0], 2).unwrap();
        let m = train_ngram_model(&s, 1, 0.0).unwrap();
        assert_eq!(conditional_entropy(&s, &m, 1).unwrap().total_nats, 0.0);
    }

    #[test]
    fn zero_probability_policies() {
        let s = Sequence::from_ids(vec![0, 0, 1, 1], 2).unwrap();
        let train = Sequence::from_ids(vec![0, 0, 0, 1], 2).unwrap();
        let m = train_ngram_model(&train, 1, 0.0).unwrap();
        // (1, 1) has a zero count in training; context (1) is unseen
        let err = conditional_entropy(&s, &m, 1).unwrap_err();
        assert!(matches!(err, Error::ZeroContext { ref context } if context == &vec![1]));
        let opts = EvalOptions {
            zero_policy: ZeroPolicy::Report,
            deterministic: true,
        };
        let r = conditional_entropy_with(&s, &m, 1, opts).unwrap();
        assert!(r.infinite);
        assert_eq!(r.total_nats, f64::INFINITY);
        assert_eq!(r.zero_events, vec![vec![1, 1]]);

        let j = JointTupleDistribution::new(2, 2, [(0, 0.5), (1, 0.25), (2, 0.25)]).unwrap();
        let err = conditional_entropy(&s, &conditional_from_joint(&j), 1).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability { tuple } if tuple == vec![1, 1]));
    }

    #[test]
    fn argument_checks() {
        let s = Sequence::from_ids(vec![0, 1], 2).unwrap();
        let m = UniformModel::new(2, 2).unwrap();
        assert!(matches!(
            conditional_entropy(&s, &m, 1),
            Err(Error::OrderMismatch { .. })
        ));
        assert!(matches!(
            conditional_entropy(&s, &m, 2),
            Err(Error::OrderTooLarge { .. })
        ));
        let m = UniformModel::new(1, 3).unwrap();
        assert!(matches!(
            conditional_entropy(&s, &m, 1),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn decomposition_of_uniform_joint() {
        let j = JointTupleDistribution::new(2, 2, (0..4).map(|k| (k, 0.25))).unwrap();
        let s = Sequence::from_ids(vec![0, 1, 0], 2).unwrap();
        let d = decompose_entropy(&s, &j).unwrap();
        assert_relative_eq!(d.h1, 2.0 * 4f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(d.h2, 2.0 * 0.5f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(d.total(), 2.0 * 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn decomposition_matches_window_oracle() {
        let (p, pi) = two_state();
        let j = joint_tuple_distribution(&p, &pi, 2).unwrap();
        let s = Sequence::from_ids(vec![0, 0, 1, 1, 1, 0, 0, 0, 1, 0], 2).unwrap();
        let d = decompose_entropy(&s, &j).unwrap();
        let ids = s.ids();
        let h1: f64 = ids.windows(2).map(|w| -j.prob_tuple(w).ln()).sum();
        let h2: f64 = ids.windows(2).map(|w| pi[w[0] as usize].ln()).sum();
        assert_relative_eq!(d.h1, h1, max_relative = 1e-13);
        assert_relative_eq!(d.h2, h2, max_relative = 1e-13);
        let h = conditional_entropy(&s, &conditional_from_joint(&j), 1).unwrap();
        assert_relative_eq!(d.total(), h.total_nats, max_relative = 1e-9);
    }

    #[test]
    fn relabeling_keeps_h1() {
        let p = crate::synth::random_chain(3, 9).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let j = joint_tuple_distribution(&p, &pi, 3).unwrap();
        let s = generate_markov(&p, &pi, 500, 1).unwrap();
        let fwd = decompose_entropy(&s, &j).unwrap();
        let bwd = decompose_entropy(&s.reversed(), &reverse_joint(&j)).unwrap();
        assert_relative_eq!(fwd.h1, bwd.h1, max_relative = 1e-10);
    }

    #[test]
    fn identity_for_iid_uniform() {
        let j = JointTupleDistribution::new(2, 2, (0..4).map(|k| (k, 0.25))).unwrap();
        let s = Sequence::from_ids(vec![0, 1, 1, 0, 1, 1, 1], 2).unwrap();
        let r = theorem_check(&s, &j, CheckOptions::default()).unwrap();
        assert_eq!(r.boundary_term, 0.0);
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.c_bound, 0.0);
    }

    #[test]
    fn identity_for_two_state_chain() {
        let (p, pi) = two_state();
        let j = joint_tuple_distribution(&p, &pi, 2).unwrap();
        // fixed sequence with s_0 = 0 and s_{N-1} = 1
        let mut ids: Vec<Symbol> = generate_markov(&p, &pi, 999, 11).unwrap().ids().to_vec();
        ids[0] = 0;
        ids.push(1);
        let s = Sequence::from_ids(ids, 2).unwrap();
        let r = theorem_check(&s, &j, CheckOptions::default()).unwrap();
        assert_relative_eq!(r.boundary_term, 2f64.ln(), max_relative = 1e-14);
        assert!(r.residual.abs() <= RESIDUAL_TOLERANCE, "{}", r.residual);
        let fwd = naive_entropy(&s, &conditional_from_joint(&j));
        let bwd = naive_entropy(&s.reversed(), &conditional_from_joint(&reverse_joint(&j)));
        assert!(((fwd - bwd) - r.boundary_term).abs() <= 1e-8);
        assert_relative_eq!(r.c_bound, 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn equal_end_tuples_cancel_exactly() {
        let p = crate::synth::random_chain(3, 4).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let j = joint_tuple_distribution(&p, &pi, 3).unwrap();
        let mut ids = generate_markov(&p, &pi, 300, 8).unwrap().ids().to_vec();
        let head = [ids[0], ids[1]];
        ids.extend(head);
        let s = Sequence::from_ids(ids, 3).unwrap();
        let r = theorem_check(&s, &j, CheckOptions::default()).unwrap();
        assert_eq!(r.first_tuple, r.last_tuple);
        assert_eq!(r.boundary_term, 0.0);
    }

    #[test]
    fn unigram_identity_is_trivial() {
        let j = JointTupleDistribution::new(1, 3, [(0, 0.2), (1, 0.3), (2, 0.5)]).unwrap();
        let s = Sequence::from_ids(vec![0, 2, 1, 2, 2], 3).unwrap();
        let r = theorem_check(&s, &j, CheckOptions::default()).unwrap();
        assert_eq!(r.boundary_term, 0.0);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn refuses_non_stationary_joint_unless_report_only() {
        let s = Sequence::from_ids(vec![0, 1, 1, 1, 0, 1], 2).unwrap();
        let j = JointTupleDistribution::empirical(&count_ngrams(&s, 2).unwrap()).unwrap();
        assert!(!j.is_stationary());
        assert!(matches!(
            theorem_check(&s, &j, CheckOptions::default()),
            Err(Error::NotStationary { .. })
        ));
        let opts = CheckOptions {
            report_only: true,
            ..Default::default()
        };
        let r = theorem_check(&s, &j, opts).unwrap();
        assert!(r.report_only);
        assert!(r.h_forward.is_finite() && r.h_backward.is_finite());
        assert!(r.residual.is_finite());
    }

    #[test]
    fn parallel_and_sequential_sums_agree() {
        let p = crate::synth::random_chain(6, 2).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let j = joint_tuple_distribution(&p, &pi, 5).unwrap();
        let s = generate_markov(&p, &pi, 200_000, 3).unwrap();
        let m = conditional_from_joint(&j);
        let par = conditional_entropy(&s, &m, 4).unwrap();
        let seq = conditional_entropy_with(
            &s,
            &m,
            4,
            EvalOptions {
                deterministic: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(par.total_nats, seq.total_nats, max_relative = 1e-13);
        assert_eq!(
            par.total_nats,
            conditional_entropy(&s, &m, 4).unwrap().total_nats
        );
    }

    #[test]
    fn delta_h_is_exactly_zero_on_palindromes() {
        let ids = vec![0, 2, 1, 1, 3, 0, 3, 1, 1, 2, 0];
        let s = Sequence::from_ids(ids, 4).unwrap();
        let r = delta_h(&s, 2, Smoothing::symmetric(0.5), DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.delta_h_per_symbol, 0.0);
        assert_eq!(r.direction_verdict, Verdict::Indistinguishable);
    }

    #[test]
    fn delta_h_on_alternating_sequence() {
        let s = Sequence::from_ids((0..1000).map(|i| i % 2).collect(), 2).unwrap();
        let r = delta_h(&s, 1, Smoothing::symmetric(1.0), DEFAULT_THRESHOLD).unwrap();
        // forward counts {(0,1): 500, (1,0): 499}; backward is the 0↔1 mirror
        let h = -(500.0 * (501.0f64 / 502.0).ln() + 499.0 * (500.0f64 / 501.0).ln());
        assert_relative_eq!(r.h_forward_total, h, max_relative = 1e-14);
        assert_relative_eq!(r.h_backward_total, h, max_relative = 1e-14);
        assert!(r.delta_h_per_symbol.abs() <= 1e-15);
        assert_eq!(r.direction_verdict, Verdict::Indistinguishable);
    }

    #[test]
    fn verdict_sign_rule() {
        assert_eq!(Verdict::from_delta(0.01, 1e-4), Verdict::BackwardEasier);
        assert_eq!(Verdict::from_delta(-0.01, 1e-4), Verdict::ForwardEasier);
        assert_eq!(Verdict::from_delta(5e-5, 1e-4), Verdict::Indistinguishable);
        let s = Sequence::from_ids(vec![0, 1, 0, 0], 2).unwrap();
        assert!(matches!(
            delta_h(&s, 1, Smoothing::symmetric(1.0), 0.0),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn symmetry_of_reversible_exact_models() {
        let p = make_reversible_chain(4, 17).unwrap();
        let pi = stationary_distribution(&p).unwrap();
        let j = joint_tuple_distribution(&p, &pi, 3).unwrap();
        let m = conditional_from_joint(&j);
        let r = symmetry_check(&m, &m, &j, 5).unwrap();
        assert!(r.max_gap <= 1e-12, "{}", r.max_gap);
        assert_eq!(r.rows.len(), 5);
        assert_eq!(r.evaluated, 64);
    }

    #[test]
    fn symmetry_against_uniform_backward_model() {
        let (p, pi) = two_state();
        let j = joint_tuple_distribution(&p, &pi, 2).unwrap();
        let m = conditional_from_joint(&j);
        let u = UniformModel::new(1, 2).unwrap();
        let r = symmetry_check(&m, &u, &j, 100).unwrap();
        assert_eq!(r.rows.len(), 4);
        let rev = reverse_joint(&j).leading_marginal();
        for row in &r.rows {
            assert_relative_eq!(row.lhs, j.prob(row.key), max_relative = 1e-14);
            let expect = (j.prob(row.key) - 0.5 * rev.get(row.tuple[1] as u64)).abs();
            assert_relative_eq!(row.abs_gap, expect, max_relative = 1e-12);
        }
        assert!(r.max_gap > 0.0);
        assert!(r.rows.windows(2).all(|w| w[0].abs_gap >= w[1].abs_gap));
    }

    #[test]
    fn symmetry_order_mismatch() {
        let (p, pi) = two_state();
        let j = joint_tuple_distribution(&p, &pi, 2).unwrap();
        let m = conditional_from_joint(&j);
        let u = UniformModel::new(2, 2).unwrap();
        assert!(matches!(
            symmetry_check(&m, &u, &j, 3),
            Err(Error::OrderMismatch { .. })
        ));
    }
}
