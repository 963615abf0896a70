//! Alphabets, symbol sequences and the tuple key encoding.
//!
//! A k-tuple `(s_0, ..., s_{k-1})` over an alphabet of size `A` is keyed by
//! the big-endian base-`A` integer `Σ s_i·A^(k-1-i)`. With this layout the
//! context of an (n+1)-tuple key is `key / A` and its last symbol `key % A`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u32;
pub type TupleKey = u64;

/// Largest supported context order.
pub const MAX_ORDER: usize = 12;

/// Reading direction of a sequence or of the data a model was trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Symbols {
    Bytes(Vec<u8>),
    Tokens(Vec<String>),
    Indexed(usize),
}

/// An ordered set of distinct symbols; symbol `i` has id `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Symbols,
}

impl Alphabet {
    pub fn bytes(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let mut seen = [false; 256];
        for &b in &bytes {
            if std::mem::replace(&mut seen[b as usize], true) {
                return Err(Error::DuplicateSymbol(byte_label(b)));
            }
        }
        Ok(Self {
            symbols: Symbols::Bytes(bytes),
        })
    }

    /// All 256 byte values, id equal to the byte value.
    pub fn full_bytes() -> Self {
        Self {
            symbols: Symbols::Bytes((0..=255).collect()),
        }
    }

    pub fn tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let mut seen = HashMap::with_capacity(tokens.len());
        for t in &tokens {
            if seen.insert(t.as_str(), ()).is_some() {
                return Err(Error::DuplicateSymbol(t.clone()));
            }
        }
        Ok(Self {
            symbols: Symbols::Tokens(tokens),
        })
    }

    /// Anonymous symbols `0..size`, used for synthetic sources and model files.
    pub fn indexed(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Self {
            symbols: Symbols::Indexed(size),
        })
    }

    pub fn size(&self) -> usize {
        match &self.symbols {
            Symbols::Bytes(b) => b.len(),
            Symbols::Tokens(t) => t.len(),
            Symbols::Indexed(n) => *n,
        }
    }

    /// Human-readable label of a symbol id.
    pub fn label(&self, id: Symbol) -> String {
        match &self.symbols {
            Symbols::Bytes(b) => b
                .get(id as usize)
                .map(|&b| byte_label(b))
                .unwrap_or_else(|| format!("#{id}")),
            Symbols::Tokens(t) => t
                .get(id as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{id}")),
            Symbols::Indexed(_) => id.to_string(),
        }
    }

    pub fn labels(&self, tuple: &[Symbol]) -> Vec<String> {
        tuple.iter().map(|&s| self.label(s)).collect()
    }
}

fn byte_label(b: u8) -> String {
    if b.is_ascii_graphic() || b == b' ' {
        (b as char).to_string()
    } else {
        format!("\\x{b:02x}")
    }
}

/// An immutable sequence of symbol ids over a shared alphabet.
///
/// The orientation records whether the ids are in their original order or
/// have been reversed; trained models pick it up as their direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sequence {
    ids: Vec<Symbol>,
    alphabet: Arc<Alphabet>,
    orientation: Direction,
}

impl Sequence {
    pub fn new(ids: Vec<Symbol>, alphabet: Arc<Alphabet>) -> Result<Self> {
        let size = alphabet.size();
        if let Some(&id) = ids.iter().find(|&&id| id as usize >= size) {
            return Err(Error::SymbolOutOfRange {
                id,
                alphabet_size: size,
            });
        }
        Ok(Self {
            ids,
            alphabet,
            orientation: Direction::Forward,
        })
    }

    /// Sequence over the anonymous alphabet `0..alphabet_size`.
    pub fn from_ids(ids: Vec<Symbol>, alphabet_size: usize) -> Result<Self> {
        Self::new(ids, Arc::new(Alphabet::indexed(alphabet_size)?))
    }

    pub fn ids(&self) -> &[Symbol] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn orientation(&self) -> Direction {
        self.orientation
    }

    pub fn reversed(&self) -> Sequence {
        let mut ids = self.ids.clone();
        ids.reverse();
        Sequence {
            ids,
            alphabet: Arc::clone(&self.alphabet),
            orientation: self.orientation.flipped(),
        }
    }

    /// The `k` symbols starting at `position`.
    pub fn tuple_at(&self, position: usize, k: usize) -> Result<&[Symbol]> {
        match position.checked_add(k) {
            Some(end) if end <= self.ids.len() => Ok(&self.ids[position..end]),
            _ => Err(Error::OutOfBounds {
                position,
                len: k,
                seq_len: self.ids.len(),
            }),
        }
    }

    /// First `n`-tuple of the sequence.
    pub fn first_tuple(&self, n: usize) -> Result<&[Symbol]> {
        self.tuple_at(0, n)
    }

    /// Last `n`-tuple of the sequence.
    pub fn last_tuple(&self, n: usize) -> Result<&[Symbol]> {
        let start = self.ids.len().checked_sub(n).ok_or(Error::OutOfBounds {
            position: 0,
            len: n,
            seq_len: self.ids.len(),
        })?;
        self.tuple_at(start, n)
    }
}

/// Builds a byte-level sequence.
///
/// By default the alphabet holds exactly the bytes present, with ids in order
/// of first occurrence. With `full_alphabet` every byte value is its own id.
pub fn ingest_bytes(raw: &[u8], full_alphabet: bool) -> Result<Sequence> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    if full_alphabet {
        let ids = raw.iter().map(|&b| b as Symbol).collect();
        return Ok(Sequence {
            ids,
            alphabet: Arc::new(Alphabet::full_bytes()),
            orientation: Direction::Forward,
        });
    }
    let mut id_of = [u32::MAX; 256];
    let mut symbols = Vec::new();
    let ids = raw
        .iter()
        .map(|&b| {
            let slot = &mut id_of[b as usize];
            if *slot == u32::MAX {
                *slot = symbols.len() as u32;
                symbols.push(b);
            }
            *slot
        })
        .collect();
    Ok(Sequence {
        ids,
        alphabet: Arc::new(Alphabet::bytes(symbols)?),
        orientation: Direction::Forward,
    })
}

/// Splits `text` on whitespace and maps each token through the declared list.
pub fn ingest_tokens(text: &str, tokens: Vec<String>) -> Result<Sequence> {
    let ids = {
        let index: HashMap<&str, Symbol> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as Symbol))
            .collect();
        text.split_whitespace()
            .map(|t| {
                index
                    .get(t)
                    .copied()
                    .ok_or_else(|| Error::UnknownToken(t.to_string()))
            })
            .collect::<Result<Vec<_>>>()?
    };
    let alphabet = Alphabet::tokens(tokens)?;
    if ids.is_empty() {
        return Err(Error::EmptyInput);
    }
    Sequence::new(ids, Arc::new(alphabet))
}

/// Parses a token-list file: one token per line, blank lines ignored.
pub fn parse_token_list(contents: &str) -> Vec<String> {
    contents
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn reverse_sequence(seq: &Sequence) -> Sequence {
    seq.reversed()
}

/// Number of distinct keys for `width`-tuples, `alphabet_size^width`.
pub fn key_space(alphabet_size: usize, width: usize) -> Result<u64> {
    let overflow = Error::KeyOverflow {
        alphabet_size,
        width,
    };
    let base = u64::try_from(alphabet_size).map_err(|_| Error::KeyOverflow {
        alphabet_size,
        width,
    })?;
    let exp = u32::try_from(width).map_err(|_| Error::KeyOverflow {
        alphabet_size,
        width,
    })?;
    base.checked_pow(exp).ok_or(overflow)
}

#[inline]
pub fn encode_tuple(tuple: &[Symbol], alphabet_size: usize) -> TupleKey {
    let a = alphabet_size as u64;
    tuple.iter().fold(0, |key, &s| key * a + s as u64)
}

pub fn decode_tuple(key: TupleKey, width: usize, alphabet_size: usize) -> Vec<Symbol> {
    let a = alphabet_size as u64;
    let mut out = vec![0; width];
    let mut rest = key;
    for slot in out.iter_mut().rev() {
        *slot = (rest % a) as Symbol;
        rest /= a;
    }
    out
}

/// Key of the reversed tuple.
#[inline]
pub fn reverse_key(key: TupleKey, width: usize, alphabet_size: usize) -> TupleKey {
    let a = alphabet_size as u64;
    let mut rest = key;
    let mut out = 0;
    for _ in 0..width {
        out = out * a + rest % a;
        rest /= a;
    }
    out
}
