//! Markov sources with exactly known tuple distributions.
//!
//! Sequences are drawn with PCG-XSL-RR-128/64 (`rand_pcg::Pcg64`, alias
//! `Lcg128Xsl64`) seeded through `SeedableRng::seed_from_u64`. A uniform
//! variate is `(next_u64 >> 11) · 2^-53`, and a symbol is drawn by scanning
//! the row's cumulative sums for the first one exceeding the variate. Given
//! the same matrix, initial distribution, length and seed the output is
//! identical on every platform.
//!
//! Only order-1 chains are generated natively. A source whose next symbol
//! depends on the last `r` symbols is a chain on `A^r` tuple states; see
//! [`expand_context_source`] and [`collapse_expanded`].

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::models::JointTupleDistribution;
use crate::sequence::{decode_tuple, key_space, Sequence, Symbol};
use crate::table::ProbTable;

/// Row sums of a transition matrix stay within this of one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Power iteration stops once successive iterates differ by less than this.
pub const POWER_TOLERANCE: f64 = 1e-14;
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;
/// `joint_tuple_distribution` accepts π with `max |πP - π|` up to this.
pub const STATIONARY_INPUT_TOLERANCE: f64 = 1e-10;

/// The pinned generator used for every random draw in this crate.
#[derive(Clone, Debug)]
pub struct SourceRng(Pcg64);

impl SourceRng {
    pub fn new(seed: u64) -> Self {
        Self(Pcg64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from `weights`, which should sum to one.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // rounding left u above the last partial sum
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }
}

/// Row-stochastic square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::Malformed {
                    what: "transition matrix",
                    reason: format!("row {i} has {} entries, expected {size}", row.len()),
                });
            }
            if let Some(&bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(Error::InvalidProbability {
                    what: format!("transition row {i}"),
                    value: bad,
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::NotNormalized {
                    what: format!("transition row {i}"),
                    sum,
                });
            }
            entries.extend(row);
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.size + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.size..(from + 1) * self.size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.size)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `v P`.
    pub fn left_multiply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += vi * p;
            }
        }
        out
    }

    fn square(m: &[f64], size: usize) -> Vec<f64> {
        let mut out = vec![0.0; size * size];
        for i in 0..size {
            for k in 0..size {
                let a = m[i * size + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..size {
                    out[i * size + j] += a * m[k * size + j];
                }
            }
        }
        out
    }
}

/// `max_j |(πP)_j - π_j|`.
pub fn stationarity_residual(p: &TransitionMatrix, pi: &[f64]) -> f64 {
    p.left_multiply(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `max_ij |π_i P_ij - π_j P_ji|`.
pub fn detailed_balance_residual(p: &TransitionMatrix, pi: &[f64]) -> f64 {
    let a = p.size();
    let mut worst = 0.0f64;
    for i in 0..a {
        for j in 0..a {
            worst = worst.max((pi[i] * p.get(i, j) - pi[j] * p.get(j, i)).abs());
        }
    }
    worst
}

/// Unique stationary distribution of an irreducible aperiodic chain.
///
/// The chain is first checked by squaring `P` until all rows of `P^(2^k)`
/// agree; reducible or periodic chains never get there and are rejected.
/// π is then refined by power iteration `π ← πP` until the estimated
/// distance to the fixed point is below [`POWER_TOLERANCE`].
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let a = p.size();
    let limit_row = converged_power(p)?;

    let mut pi = limit_row;
    let mut converged = false;
    let mut iterations = 0;
    let mut previous = f64::INFINITY;
    while iterations < MAX_POWER_ITERATIONS {
        iterations += 1;
        let mut next = p.left_multiply(&pi);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let diff = next
            .iter()
            .zip(&pi)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        pi = next;
        // geometric tail of the remaining steps
        let ratio = diff / previous;
        let tail = if ratio < 1.0 {
            diff * ratio / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        if diff <= 4.0 * f64::EPSILON || (diff < POWER_TOLERANCE && tail < POWER_TOLERANCE) {
            converged = true;
            break;
        }
        previous = diff;
    }
    if !converged || stationarity_residual(p, &pi) > ROW_SUM_TOLERANCE {
        return Err(Error::NoConvergence { iterations });
    }
    debug_assert_eq!(pi.len(), a);
    Ok(pi)
}

/// Row 0 of `lim P^t`, or an error when the rows never agree.
fn converged_power(p: &TransitionMatrix) -> Result<Vec<f64>> {
    const ROW_AGREEMENT: f64 = 1e-10;
    const MAX_SQUARINGS: usize = 64;
    let a = p.size();
    let mut m = p.entries.clone();
    for squarings in 0..MAX_SQUARINGS {
        let spread = (1..a)
            .flat_map(|i| (0..a).map(move |j| (i, j)))
            .map(|(i, j)| (m[i * a + j] - m[j]).abs())
            .fold(0.0, f64::max);
        if spread < ROW_AGREEMENT {
            return Ok(m[..a].to_vec());
        }
        let next = TransitionMatrix::square(&m, a);
        let moved = next
            .iter()
            .zip(&m)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        m = next;
        if moved == 0.0 {
            // P^(2^k) is idempotent with distinct rows: reducible
            return Err(Error::NoConvergence {
                iterations: 1 << squarings,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_POWER_ITERATIONS,
    })
}

/// Draws `length` symbols: `s_0 ~ init`, `s_{t+1} ~ P[s_t]`.
pub fn generate_markov(
    p: &TransitionMatrix,
    init: &[f64],
    length: usize,
    seed: u64,
) -> Result<Sequence> {
    let a = p.size();
    if length == 0 {
        return Err(Error::EmptyInput);
    }
    if init.len() != a {
        return Err(Error::AlphabetMismatch {
            expected: a,
            found: init.len(),
        });
    }
    if let Some(&bad) = init.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidProbability {
            what: "initial distribution".into(),
            value: bad,
        });
    }
    let total: f64 = init.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized {
            what: "initial distribution".into(),
            sum: total,
        });
    }
    let mut rng = SourceRng::new(seed);
    let mut ids = Vec::with_capacity(length);
    let mut state = rng.categorical(init);
    ids.push(state as Symbol);
    for _ in 1..length {
        state = rng.categorical(p.row(state));
        ids.push(state as Symbol);
    }
    Sequence::from_ids(ids, a)
}

/// Exact joint of `m` consecutive symbols of the chain started from π:
/// `J(s_0..s_{m-1}) = π(s_0) Π P[s_i][s_{i+1}]`.
pub fn joint_tuple_distribution(
    p: &TransitionMatrix,
    pi: &[f64],
    m: usize,
) -> Result<JointTupleDistribution> {
    let a = p.size();
    if m == 0 {
        return Err(Error::ZeroOrder);
    }
    if pi.len() != a {
        return Err(Error::AlphabetMismatch {
            expected: a,
            found: pi.len(),
        });
    }
    let residual = stationarity_residual(p, pi);
    if residual > STATIONARY_INPUT_TOLERANCE {
        return Err(Error::NotStationaryFor { residual });
    }
    key_space(a, m)?;
    let a64 = a as u64;
    let mut level: Vec<(u64, f64)> = pi
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(s, &x)| (s as u64, x))
        .collect();
    for _ in 1..m {
        let mut next = Vec::with_capacity(level.len() * a);
        for &(key, prob) in &level {
            let last = (key % a64) as usize;
            for (s, &t) in p.row(last).iter().enumerate() {
                if t > 0.0 {
                    next.push((key * a64 + s as u64, prob * t));
                }
            }
        }
        level = next;
    }
    let mut table = ProbTable::zeros(m, a)?;
    for (key, prob) in level {
        table.set(key, prob);
    }
    let joint = JointTupleDistribution::from_table(table)?;
    if !joint.is_stationary() {
        return Err(Error::NotStationary {
            deviation: joint.stationarity_deviation(),
        });
    }
    Ok(joint)
}

/// Reversible chain `P_ij = w_ij / Σ_k w_ik` from symmetric weights.
///
/// Detailed balance holds with `π_i ∝ Σ_k w_ik`.
pub fn reversible_from_weights(weights: &[Vec<f64>]) -> Result<TransitionMatrix> {
    let a = weights.len();
    if weights.iter().any(|row| row.len() != a) {
        return Err(Error::Malformed {
            what: "weight matrix",
            reason: "not square".into(),
        });
    }
    for (i, row) in weights.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if !w.is_finite() || w < 0.0 || w != weights[j][i] {
                return Err(Error::Malformed {
                    what: "weight matrix",
                    reason: format!("entry ({i}, {j}) is negative or breaks symmetry"),
                });
            }
        }
    }
    let rows = weights
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                return Err(Error::Malformed {
                    what: "weight matrix",
                    reason: "row with zero total weight".into(),
                });
            }
            Ok(row.iter().map(|w| w / total).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    TransitionMatrix::new(rows)
}

/// Random reversible chain with weights in `[0.05, 1)`, irreducible and aperiodic.
pub fn make_reversible_chain(alphabet_size: usize, seed: u64) -> Result<TransitionMatrix> {
    if alphabet_size < 2 {
        return Err(Error::Malformed {
            what: "reversible chain",
            reason: format!("needs at least 2 states, got {alphabet_size}"),
        });
    }
    let mut rng = SourceRng::new(seed);
    let mut w = vec![vec![0.0; alphabet_size]; alphabet_size];
    for (i, j) in (0..alphabet_size).flat_map(|i| (i..alphabet_size).map(move |j| (i, j))) {
        let x = 0.05 + 0.95 * rng.next_f64();
        w[i][j] = x;
        w[j][i] = x;
    }
    reversible_from_weights(&w)
}

/// Random chain with every entry positive, generally not reversible.
pub fn random_chain(alphabet_size: usize, seed: u64) -> Result<TransitionMatrix> {
    if alphabet_size == 0 {
        return Err(Error::EmptyAlphabet);
    }
    let mut rng = SourceRng::new(seed);
    let rows = (0..alphabet_size)
        .map(|_| {
            let raw: Vec<f64> = (0..alphabet_size)
                .map(|_| 0.05 + 0.95 * rng.next_f64())
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        })
        .collect();
    TransitionMatrix::new(rows)
}

/// Chain on `A^r` states for a source whose next symbol depends on the last `r`.
///
/// `next_symbol[t][x]` is the probability of `x` after the r-tuple keyed `t`;
/// the state `(s_1..s_r)` moves to `(s_2..s_r, x)`.
pub fn expand_context_source(
    next_symbol: &[Vec<f64>],
    alphabet_size: usize,
    r: usize,
) -> Result<TransitionMatrix> {
    let a = alphabet_size as u64;
    let states = key_space(alphabet_size, r)?;
    if r == 0 || next_symbol.len() as u64 != states {
        return Err(Error::Malformed {
            what: "context source",
            reason: format!("expected {states} rows of next-symbol probabilities"),
        });
    }
    let shift = states / a;
    let mut rows = vec![vec![0.0; states as usize]; states as usize];
    for (state, probs) in next_symbol.iter().enumerate() {
        if probs.len() != alphabet_size {
            return Err(Error::Malformed {
                what: "context source",
                reason: format!("row {state} has {} entries", probs.len()),
            });
        }
        let base = (state as u64 % shift) * a;
        for (x, &q) in probs.iter().enumerate() {
            rows[state][(base + x as u64) as usize] = q;
        }
    }
    TransitionMatrix::new(rows)
}

/// Symbols of a state sequence produced from [`expand_context_source`].
pub fn collapse_expanded(states: &Sequence, alphabet_size: usize, r: usize) -> Result<Sequence> {
    let ids = states.ids();
    let Some((&first, rest)) = ids.split_first() else {
        return Err(Error::EmptyInput);
    };
    let mut out = decode_tuple(first as u64, r, alphabet_size);
    out.extend(rest.iter().map(|&s| s % alphabet_size as Symbol));
    Sequence::from_ids(out, alphabet_size)
}
