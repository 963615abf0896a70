use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Args;

use timerev_core::sequence::parse_token_list;
use timerev_core::{ingest_bytes, ingest_tokens, Alphabet, Sequence};

#[derive(Args, Debug, Clone, Default)]
pub struct InputArgs {
    /// Sequence file (bytes by default).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Give every byte value its own id instead of only the bytes present.
    #[arg(long)]
    pub full_alphabet: bool,
    /// Read whitespace-separated tokens declared in this file, one per line.
    #[arg(long, conflicts_with = "full_alphabet")]
    pub tokens: Option<PathBuf>,
    /// Bytes are symbol ids, as written by `gen`.
    #[arg(long, conflicts_with_all = ["full_alphabet", "tokens"])]
    pub ids: bool,
    /// Use only the first N symbols.
    #[arg(long)]
    pub limit: Option<usize>,
}

impl InputArgs {
    /// Reads the sequence, if a file was given. `alphabet_size` sizes the
    /// alphabet of `--ids` input; otherwise the largest id decides.
    pub fn read(&self, alphabet_size: Option<usize>) -> Result<Option<Sequence>> {
        let Some(path) = &self.input else {
            return Ok(None);
        };
        let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let limit = self.limit.unwrap_or(usize::MAX);
        let seq = if let Some(list) = &self.tokens {
            let declared =
                fs::read_to_string(list).with_context(|| format!("reading {}", list.display()))?;
            let text = String::from_utf8(raw).context("token input is not UTF-8")?;
            let kept: Vec<&str> = text.split_whitespace().take(limit).collect();
            ingest_tokens(&kept.join(" "), parse_token_list(&declared))?
        } else if self.ids {
            let ids: Vec<u32> = raw.iter().take(limit).map(|&b| b as u32).collect();
            let size =
                alphabet_size.unwrap_or_else(|| ids.iter().max().map_or(1, |&m| m as usize + 1));
            Sequence::new(ids, Arc::new(Alphabet::indexed(size)?))?
        } else {
            ingest_bytes(&raw[..raw.len().min(limit)], self.full_alphabet)?
        };
        Ok(Some(seq))
    }
}
