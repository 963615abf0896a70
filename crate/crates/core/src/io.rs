//! JSON model and transition-matrix files.
//!
//! Model file:
//!
//! ```json
//! {"order": 1, "alphabet_size": 2, "kind": "joint",
//!  "entries": [{"key": 1, "tuple": [0, 1], "prob": 0.5}, ...]}
//! ```
//!
//! `order` is the context length `n`; joint entries cover (n+1)-tuples.
//! Conditional entries carry `context_key` and `symbol` instead of `key`.
//! Either form may give `tuple` alone. Tables whose total (joint) or rows
//! (conditional) miss 1 by less than [`RENORMALIZE_LIMIT`] are rescaled;
//! larger deviations are rejected.
//!
//! Transition file: `{"alphabet_size": A, "rows": [[...], ...]}`, rows
//! renormalized under the same rule.

use std::fs;
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    conditional_from_joint, ConditionalModel, JointTupleDistribution, TableConditional,
};
use crate::sequence::{decode_tuple, encode_tuple, key_space, Symbol, TupleKey, MAX_ORDER};
use crate::sum::compensated_sum;
use crate::synth::TransitionMatrix;

pub const RENORMALIZE_LIMIT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Joint,
    Conditional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<TupleKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_key: Option<TupleKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple: Option<Vec<Symbol>>,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub order: usize,
    pub alphabet_size: usize,
    pub kind: ModelKind,
    pub entries: Vec<ModelEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionFile {
    pub alphabet_size: usize,
    pub rows: Vec<Vec<f64>>,
}

/// A model read from disk.
#[derive(Clone, Debug)]
pub enum LoadedModel {
    Joint(JointTupleDistribution),
    Conditional(TableConditional),
}

impl LoadedModel {
    pub fn order(&self) -> usize {
        match self {
            LoadedModel::Joint(j) => j.context_order(),
            LoadedModel::Conditional(m) => m.order(),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            LoadedModel::Joint(j) => j.alphabet_size(),
            LoadedModel::Conditional(m) => m.alphabet_size(),
        }
    }

    /// Joint files become their exact conditional.
    pub fn into_conditional(self) -> Box<dyn ConditionalModel> {
        match self {
            LoadedModel::Joint(j) => Box::new(conditional_from_joint(&j)),
            LoadedModel::Conditional(m) => Box::new(m),
        }
    }
}

fn malformed(reason: String) -> Error {
    Error::Malformed {
        what: "model file",
        reason,
    }
}

fn entry_key(entry: &ModelEntry, file: &ModelFile) -> Result<TupleKey> {
    let a = file.alphabet_size;
    let width = file.order + 1;
    let from_tuple = match &entry.tuple {
        Some(t) => {
            if t.len() != width {
                return Err(malformed(format!(
                    "tuple {t:?} has length {}, expected {width}",
                    t.len()
                )));
            }
            if let Some(&id) = t.iter().find(|&&s| s as usize >= a) {
                return Err(Error::SymbolOutOfRange {
                    id,
                    alphabet_size: a,
                });
            }
            Some(encode_tuple(t, a))
        }
        None => None,
    };
    let from_fields = match file.kind {
        ModelKind::Joint => entry.key,
        ModelKind::Conditional => match (entry.context_key, entry.symbol) {
            (Some(c), Some(s)) => {
                if s as usize >= a {
                    return Err(Error::SymbolOutOfRange {
                        id: s,
                        alphabet_size: a,
                    });
                }
                Some(
                    c.checked_mul(a as u64)
                        .and_then(|k| k.checked_add(s as u64))
                        .ok_or_else(|| malformed(format!("context key {c} out of range")))?,
                )
            }
            (None, None) => None,
            _ => {
                return Err(malformed(
                    "context_key and symbol must be given together".into(),
                ))
            }
        },
    };
    match (from_fields, from_tuple) {
        (Some(k), Some(t)) if k != t => Err(malformed(format!(
            "key {k} does not match tuple {:?}",
            entry.tuple.as_deref().unwrap_or_default()
        ))),
        (Some(k), _) | (None, Some(k)) => Ok(k),
        (None, None) => Err(malformed("entry has neither a key nor a tuple".into())),
    }
}

/// Scale factor that brings `sum` to one, if the deviation is small enough.
fn renormalizer(sum: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if (sum - 1.0).abs() < RENORMALIZE_LIMIT {
        Ok(1.0 / sum)
    } else {
        Err(Error::NotNormalized { what: what(), sum })
    }
}

impl ModelFile {
    pub fn from_joint(joint: &JointTupleDistribution) -> Self {
        let a = joint.alphabet_size();
        let width = joint.order();
        Self {
            order: joint.context_order(),
            alphabet_size: a,
            kind: ModelKind::Joint,
            entries: joint
                .entries()
                .into_iter()
                .map(|(key, prob)| ModelEntry {
                    key: Some(key),
                    context_key: None,
                    symbol: None,
                    tuple: Some(decode_tuple(key, width, a)),
                    prob,
                })
                .collect(),
        }
    }

    /// Tabulates every row of `model` that has a defined conditional.
    pub fn from_conditional<M: ConditionalModel + ?Sized>(model: &M) -> Result<Self> {
        let n = model.order();
        let a = model.alphabet_size();
        let contexts = key_space(a, n)?;
        let mut entries = Vec::new();
        for context in 0..contexts {
            let row: Result<Vec<f64>> = (0..a as Symbol).map(|s| model.prob(context, s)).collect();
            let Ok(row) = row else { continue };
            for (s, prob) in row.into_iter().enumerate() {
                if prob > 0.0 {
                    let key = context * a as u64 + s as u64;
                    entries.push(ModelEntry {
                        key: None,
                        context_key: Some(context),
                        symbol: Some(s as Symbol),
                        tuple: Some(decode_tuple(key, n + 1, a)),
                        prob,
                    });
                }
            }
        }
        Ok(Self {
            order: n,
            alphabet_size: a,
            kind: ModelKind::Conditional,
            entries,
        })
    }

    pub fn into_model(self) -> Result<LoadedModel> {
        if self.alphabet_size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if self.order > MAX_ORDER {
            return Err(Error::UnsupportedOrder(self.order));
        }
        let a = self.alphabet_size;
        let space = key_space(a, self.order + 1)?;
        let mut cells: FxHashMap<TupleKey, f64> = FxHashMap::default();
        for entry in &self.entries {
            let key = entry_key(entry, &self)?;
            if key >= space {
                return Err(malformed(format!(
                    "key {key} outside key space of size {space}"
                )));
            }
            if !(entry.prob.is_finite() && (0.0..=1.0 + RENORMALIZE_LIMIT).contains(&entry.prob)) {
                return Err(Error::InvalidProbability {
                    what: format!("entry {key}"),
                    value: entry.prob,
                });
            }
            if cells.insert(key, entry.prob).is_some() {
                return Err(malformed(format!("duplicate key {key}")));
            }
        }
        match self.kind {
            ModelKind::Joint => {
                let mut sorted: Vec<_> = cells.into_iter().collect();
                sorted.sort_unstable_by_key(|&(k, _)| k);
                let sum = compensated_sum(sorted.iter().map(|&(_, p)| p));
                let scale = renormalizer(sum, || "joint distribution".into())?;
                let entries = sorted.into_iter().map(|(k, p)| (k, (p * scale).min(1.0)));
                Ok(LoadedModel::Joint(JointTupleDistribution::new(
                    self.order + 1,
                    a,
                    entries,
                )?))
            }
            ModelKind::Conditional => {
                let mut rows: FxHashMap<TupleKey, Vec<f64>> = FxHashMap::default();
                for (key, p) in cells {
                    rows.entry(key / a as u64).or_insert_with(|| vec![0.0; a])
                        [(key % a as u64) as usize] = p;
                }
                for (context, row) in rows.iter_mut() {
                    let sum = compensated_sum(row.iter().copied());
                    let scale = renormalizer(sum, || {
                        format!("row {:?}", decode_tuple(*context, self.order, a))
                    })?;
                    row.iter_mut().for_each(|p| *p *= scale);
                }
                Ok(LoadedModel::Conditional(TableConditional::new(
                    self.order, a, rows,
                )?))
            }
        }
    }
}

impl TransitionFile {
    pub fn from_matrix(p: &TransitionMatrix) -> Self {
        Self {
            alphabet_size: p.size(),
            rows: p.rows(),
        }
    }

    pub fn into_matrix(self) -> Result<TransitionMatrix> {
        let what = "transition file";
        if self.rows.len() != self.alphabet_size {
            return Err(Error::Malformed {
                what,
                reason: format!(
                    "{} rows for alphabet size {}",
                    self.rows.len(),
                    self.alphabet_size
                ),
            });
        }
        let mut rows = self.rows;
        for (i, row) in rows.iter_mut().enumerate() {
            if row.len() != self.alphabet_size {
                return Err(Error::Malformed {
                    what,
                    reason: format!("row {i} has {} entries", row.len()),
                });
            }
            if let Some(&p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(Error::InvalidProbability {
                    what: format!("transition row {i}"),
                    value: p,
                });
            }
            let scale = renormalizer(compensated_sum(row.iter().copied()), || {
                format!("transition row {i}")
            })?;
            row.iter_mut().for_each(|p| *p *= scale);
        }
        TransitionMatrix::new(rows)
    }
}

pub fn read_model(path: &Path) -> Result<LoadedModel> {
    let file: ModelFile = serde_json::from_slice(&fs::read(path)?)?;
    file.into_model()
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<()> {
    fs::write(path, serde_json::to_vec_pretty(file)?)?;
    Ok(())
}

pub fn read_transition(path: &Path) -> Result<TransitionMatrix> {
    let file: TransitionFile = serde_json::from_slice(&fs::read(path)?)?;
    file.into_matrix()
}

pub fn write_transition(path: &Path, p: &TransitionMatrix) -> Result<()> {
    fs::write(
        path,
        serde_json::to_vec_pretty(&TransitionFile::from_matrix(p))?,
    )?;
    Ok(())
}
