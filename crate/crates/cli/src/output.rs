use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Report destination: a file or stdout.
pub struct Sink {
    path: Option<PathBuf>,
    format: Format,
}

impl Sink {
    pub fn new(path: Option<PathBuf>, format: Format) -> Self {
        Self { path, format }
    }

    fn write(&self, bytes: &[u8]) -> Result<()> {
        match &self.path {
            Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    /// Pretty JSON with object keys in sorted order.
    pub fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        let value = serde_json::to_value(value)?;
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        self.write(text.as_bytes())
    }

    pub fn csv_rows<I>(&self, rows: I, header: &[&str]) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        self.write(&w.into_inner().context("flushing csv")?)
    }

    /// JSON, or one CSV record of the top-level fields.
    pub fn report<T: Serialize>(&self, value: &T) -> Result<()> {
        match self.format {
            Format::Json => self.json(value),
            Format::Csv => {
                let Value::Object(map) = serde_json::to_value(value)? else {
                    return self.json(value);
                };
                let header: Vec<&str> = map.keys().map(String::as_str).collect();
                let row = map
                    .values()
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect();
                self.csv_rows([row], &header)
            }
        }
    }
}
