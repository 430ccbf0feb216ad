//! CSV and JSON writers with an embedded metadata block.

use std::path::Path;

use serde_json::{json, Value};

use crate::error::Result;
use crate::VERSION;

/// Provenance stamped on every output file.
#[derive(Clone, Debug)]
pub struct Metadata {
    pub command: &'static str,
    pub config: Value,
}

impl Metadata {
    fn to_value(&self) -> Value {
        json!({
            "artifact": "coherent-torus",
            "version": VERSION,
            "command": self.command,
            "config": self.config,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text: `#`-prefixed metadata lines, a header row, then the rows.
pub fn csv(meta: &Metadata, header: &[String], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# artifact: coherent-torus {VERSION}\r\n"));
    out.push_str(&format!("# command: {}\r\n", meta.command));
    out.push_str(&format!("# config: {}\r\n", meta.config));
    out.push_str(&header.join(","));
    out.push_str("\r\n");
    for row in rows {
        let fields: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Int(i) => i.to_string(),
                Cell::Float(f) => format_float(*f),
            })
            .collect();
        out.push_str(&fields.join(","));
        out.push_str("\r\n");
    }
    out
}

/// Pretty JSON object with the metadata under `"metadata"` and `body`'s
/// fields alongside it.
pub fn json_document(meta: &Metadata, body: Value) -> Result<String> {
    let mut map = match body {
        Value::Object(map) => map,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    map.insert("metadata".into(), meta.to_value());
    let mut text = serde_json::to_string_pretty(&Value::Object(map))?;
    text.push('\n');
    Ok(text)
}

/// Files produced by one command, written together once everything succeeded.
#[derive(Default, Debug)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write_all(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}
