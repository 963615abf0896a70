use rustc_hash::FxHashMap;

use super::joint::{check_probability, JointTupleDistribution};
use super::ConditionalModel;
use crate::error::{Error, Result};
use crate::sequence::{decode_tuple, key_space, reverse_key, Direction, Symbol, TupleKey};
use crate::table::ProbTable;

/// Row sums of a conditional model stay within this of one.
pub const ROW_TOLERANCE: f64 = 1e-12;

fn check_symbol(next: Symbol, alphabet_size: usize) -> Result<()> {
    if (next as usize) < alphabet_size {
        Ok(())
    } else {
        Err(Error::SymbolOutOfRange {
            id: next,
            alphabet_size,
        })
    }
}

/// `P(s | t) = J(t, s) / Σ_s' J(t, s')`, read directly off a joint.
#[derive(Clone, Debug)]
pub struct ExactConditional {
    joint: JointTupleDistribution,
    contexts: ProbTable,
}

impl ExactConditional {
    pub fn joint(&self) -> &JointTupleDistribution {
        &self.joint
    }

    /// Context marginals `p(s_0..s_{n-1})`.
    pub fn context_marginals(&self) -> &ProbTable {
        &self.contexts
    }
}

pub fn conditional_from_joint(joint: &JointTupleDistribution) -> ExactConditional {
    ExactConditional {
        contexts: joint.leading_marginal(),
        joint: joint.clone(),
    }
}

impl ConditionalModel for ExactConditional {
    fn order(&self) -> usize {
        self.joint.context_order()
    }

    fn alphabet_size(&self) -> usize {
        self.joint.alphabet_size()
    }

    fn prob(&self, context: TupleKey, next: Symbol) -> Result<f64> {
        let a = self.alphabet_size();
        check_symbol(next, a)?;
        let marginal = self.contexts.get(context);
        if marginal <= 0.0 {
            return Err(Error::ZeroContext {
                context: decode_tuple(context, self.order(), a),
            });
        }
        Ok(self.joint.prob(context * a as u64 + next as u64) / marginal)
    }
}

/// Previous-symbol model obtained from a next-symbol model by Bayes' rule.
///
/// Evaluated on the reversed sequence: the context `(c_0..c_{n-1})` lists
/// the following symbols nearest first, so
/// `prob((c_0..c_{n-1}), a) = P(c_0 | a, c_{n-1}..c_1)·p(a, c_{n-1}..c_1) / p(c_{n-1}..c_0)`.
#[derive(Clone, Debug)]
pub struct BayesReversed {
    order: usize,
    numerators: ProbTable,
    denominators: ProbTable,
    direction: Option<Direction>,
}

/// Reverses `forward` given the marginals of its contexts.
///
/// The denominator `p(s_1..s_n)` is recovered as
/// `Σ_{s_0} P(s_n | s_0..s_{n-1})·p(s_0..s_{n-1})`, so rows of the result sum
/// to one by construction. A context whose denominator is zero can't be
/// queried; doing so reports the offending tuple.
pub fn bayes_reverse_conditional<M>(
    forward: &M,
    context_marginals: &ProbTable,
) -> Result<BayesReversed>
where
    M: ConditionalModel + ?Sized,
{
    let n = forward.order();
    let a = forward.alphabet_size();
    if context_marginals.width() != n {
        return Err(Error::OrderMismatch {
            expected: n,
            found: context_marginals.width(),
        });
    }
    if context_marginals.alphabet_size() != a {
        return Err(Error::AlphabetMismatch {
            expected: a,
            found: context_marginals.alphabet_size(),
        });
    }
    let mut numerators = ProbTable::zeros(n + 1, a)?;
    let mut denominators = ProbTable::zeros(n, a)?;
    for (context, marginal) in context_marginals.nonzero() {
        check_probability(marginal, || {
            format!("context marginal {:?}", decode_tuple(context, n, a))
        })?;
        for s in 0..a as Symbol {
            let joint = forward.prob(context, s)? * marginal;
            if joint == 0.0 {
                continue;
            }
            let reversed = reverse_key(context * a as u64 + s as u64, n + 1, a);
            numerators.set(reversed, joint);
            denominators.add(reversed / a as u64, joint);
        }
    }
    Ok(BayesReversed {
        order: n,
        numerators,
        denominators,
        direction: forward.direction().map(Direction::flipped),
    })
}

impl ConditionalModel for BayesReversed {
    fn order(&self) -> usize {
        self.order
    }

    fn alphabet_size(&self) -> usize {
        self.numerators.alphabet_size()
    }

    fn prob(&self, context: TupleKey, next: Symbol) -> Result<f64> {
        let a = self.alphabet_size();
        check_symbol(next, a)?;
        let denominator = self.denominators.get(context);
        if denominator <= 0.0 {
            return Err(Error::ZeroDenominator {
                tuple: decode_tuple(reverse_key(context, self.order, a), self.order, a),
            });
        }
        Ok(self.numerators.get(context * a as u64 + next as u64) / denominator)
    }

    fn direction(&self) -> Option<Direction> {
        self.direction
    }
}

/// Every symbol equally likely in every context.
#[derive(Clone, Copy, Debug)]
pub struct UniformModel {
    order: usize,
    alphabet_size: usize,
}

impl UniformModel {
    pub fn new(order: usize, alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Self {
            order,
            alphabet_size,
        })
    }
}

impl ConditionalModel for UniformModel {
    fn order(&self) -> usize {
        self.order
    }

    fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    fn prob(&self, _context: TupleKey, next: Symbol) -> Result<f64> {
        check_symbol(next, self.alphabet_size)?;
        Ok(1.0 / self.alphabet_size as f64)
    }
}

/// Explicit per-context rows, as loaded from a model file.
#[derive(Clone, Debug, PartialEq)]
pub struct TableConditional {
    order: usize,
    alphabet_size: usize,
    rows: FxHashMap<TupleKey, Vec<f64>>,
}

impl TableConditional {
    /// Each row must hold `alphabet_size` probabilities summing to one.
    pub fn new(
        order: usize,
        alphabet_size: usize,
        rows: FxHashMap<TupleKey, Vec<f64>>,
    ) -> Result<Self> {
        let space = key_space(alphabet_size, order)?;
        key_space(alphabet_size, order + 1)?;
        for (&context, row) in &rows {
            let label = || format!("context {:?}", decode_tuple(context, order, alphabet_size));
            if context >= space || row.len() != alphabet_size {
                return Err(Error::Malformed {
                    what: "conditional model",
                    reason: format!("bad row for {}", label()),
                });
            }
            for &p in row {
                check_probability(p, label)?;
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::NotNormalized { what: label(), sum });
            }
        }
        Ok(Self {
            order,
            alphabet_size,
            rows,
        })
    }

    pub fn rows(&self) -> &FxHashMap<TupleKey, Vec<f64>> {
        &self.rows
    }
}

impl ConditionalModel for TableConditional {
    fn order(&self) -> usize {
        self.order
    }

    fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    fn prob(&self, context: TupleKey, next: Symbol) -> Result<f64> {
        check_symbol(next, self.alphabet_size)?;
        self.rows
            .get(&context)
            .map(|row| row[next as usize])
            .ok_or_else(|| Error::ZeroContext {
                context: decode_tuple(context, self.order, self.alphabet_size),
            })
    }
}
