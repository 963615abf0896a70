//! Joint tuple distributions and conditional next-symbol models.
//!
//! A [`ConditionalModel`] of order `n` gives `P(next | context)` for an
//! `n`-symbol context. Contexts are passed as tuple keys, so the context of
//! an (n+1)-tuple key `t` is `t / A` and the predicted symbol `t % A`.
//!
//! Models evaluated on a reversed sequence read their context in reversed
//! sequence order: the backward model's context for predicting `s_0` is
//! `(s_n, ..., s_1)`.

mod exact;
mod joint;
mod trained;

pub use exact::{
    bayes_reverse_conditional, conditional_from_joint, BayesReversed, ExactConditional,
    TableConditional, UniformModel,
};
pub use joint::{reverse_joint, JointTupleDistribution, STATIONARITY_TOLERANCE};
pub use trained::{train_ngram_model, NGramModel};

use crate::error::Result;
use crate::sequence::{encode_tuple, Direction, Symbol, TupleKey};

pub trait ConditionalModel: Send + Sync {
    /// Context length `n`.
    fn order(&self) -> usize;

    fn alphabet_size(&self) -> usize;

    /// Probability that `next` follows the context keyed by `context`.
    fn prob(&self, context: TupleKey, next: Symbol) -> Result<f64>;

    /// Direction of the data the model was fitted to, if it has one.
    fn direction(&self) -> Option<Direction> {
        None
    }

    fn prob_tuple(&self, context: &[Symbol], next: Symbol) -> Result<f64> {
        self.prob(encode_tuple(context, self.alphabet_size()), next)
    }
}

impl<M: ConditionalModel + ?Sized> ConditionalModel for &M {
    fn order(&self) -> usize {
        (**self).order()
    }
    fn alphabet_size(&self) -> usize {
        (**self).alphabet_size()
    }
    fn prob(&self, context: TupleKey, next: Symbol) -> Result<f64> {
        (**self).prob(context, next)
    }
    fn direction(&self) -> Option<Direction> {
        (**self).direction()
    }
}

impl<M: ConditionalModel + ?Sized> ConditionalModel for Box<M> {
    fn order(&self) -> usize {
        (**self).order()
    }
    fn alphabet_size(&self) -> usize {
        (**self).alphabet_size()
    }
    fn prob(&self, context: TupleKey, next: Symbol) -> Result<f64> {
        (**self).prob(context, next)
    }
    fn direction(&self) -> Option<Direction> {
        (**self).direction()
    }
}
