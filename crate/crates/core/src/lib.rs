//! Forward and backward conditional entropy of discrete sequences.
//!
//! The crate computes the cross-entropy of a sequence under an order-`n`
//! conditional model in both reading directions and checks the exact
//! relation between the two: for a stationary tuple distribution `p`, the
//! forward entropy of `S` and the backward entropy of its reverse differ by
//! `log p(first n-tuple) - log p(last n-tuple)`, nothing else.
//!
//! Building blocks:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`sequence`] | alphabets, sequences, reversal, tuple key encoding |
//! | [`ngram`] | exact overlapping k-tuple counts and their boundary marginals |
//! | [`models`] | joint tuple distributions, exact/Bayes-reversed/trained conditional models |
//! | [`entropy`] | entropy totals, H1/H2 decomposition, identity check, ΔH, symmetry diagnostic |
//! | [`synth`] | Markov sources, stationary distributions and exact joints |
//! | [`io`] | JSON model and transition-matrix files |
//!
//! All logarithms are natural; reports convert to bits on request.

pub mod entropy;
pub mod error;
pub mod io;
pub mod models;
pub mod ngram;
pub mod sequence;
pub mod sum;
pub mod synth;
mod table;

pub use entropy::{
    conditional_entropy, conditional_entropy_with, decompose_entropy, delta_h, delta_h_with,
    entropy_from_counts, symmetry_check, theorem_check, CheckOptions, Decomposition, DeltaHReport,
    EntropyReport, EvalOptions, Smoothing, SymmetryReport, SymmetryRow, TheoremCheckReport, Units,
    Verdict, ZeroPolicy, DEFAULT_THRESHOLD, RESIDUAL_TOLERANCE,
};
pub use error::{Error, Result};
pub use models::{
    bayes_reverse_conditional, conditional_from_joint, reverse_joint, train_ngram_model,
    BayesReversed, ConditionalModel, ExactConditional, JointTupleDistribution, NGramModel,
    TableConditional, UniformModel,
};
pub use ngram::{count_ngrams, end_marginal, reverse_table, start_marginal, NGramTable};
pub use sequence::{
    ingest_bytes, ingest_tokens, reverse_sequence, Alphabet, Direction, Sequence, Symbol, TupleKey,
};
pub use table::ProbTable;
