//! CSV with a `#`-prefixed metadata header, or a JSON document.

use std::io::Write;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Ordered `key: value` pairs written ahead of the data.
#[derive(Debug, Default)]
pub struct Metadata {
    entries: Vec<(String, Value)>,
}

impl Metadata {
    pub fn push(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.entries.push((key.to_string(), v));
    }

    fn as_json(&self) -> Value {
        Value::Object(self.entries.iter().cloned().collect())
    }
}

pub fn render<T: Serialize>(meta: &Metadata, rows: &[T], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let doc = json!({ "metadata": meta.as_json(), "rows": rows });
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            for (k, v) in &meta.entries {
                let text = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                writeln!(out, "# {k}: {text}")?;
            }
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).context("writing CSV row")?;
            }
            w.flush()?;
            Ok(w.into_inner().context("finishing CSV")?)
        }
    }
}

pub fn write(path: Option<&std::path::Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
