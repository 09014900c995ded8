//! CSV tables and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Fixed-point rendering with ten decimals; negative zero prints as zero.
pub fn fmt(v: f64) -> String {
    let s = format!("{v:.10}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn price_columns() -> Vec<String> {
    (1..=crate::data::HOURS).map(|h| format!("price_{h:02}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_prices(mut self) -> Self {
        self.header.extend(price_columns());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::io(format!("{}: {e}", self.name));
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::io(format!("{}: {e}", self.name)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_table(dir: &Path, table: &Table) -> CliResult<OutputRecord> {
    let bytes = table.to_bytes()?;
    write_file(dir, &table.name, &bytes)?;
    Ok(OutputRecord {
        file: table.name.clone(),
        rows: table.rows.len(),
        sha256: sha256_hex(&bytes),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub dahp_cli_version: String,
    pub dahp_core_version: String,
    pub seed: u64,
    /// SHA-256 of the effective configuration (output directory excluded).
    pub config_sha256: String,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputRecord {
    pub role: String,
    /// `synthetic` or the SHA-256 of the file read.
    pub source: String,
    pub days: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt(1.5), "1.5000000000");
        assert_eq!(fmt(-1e-14), "0.0000000000");
        assert_eq!(fmt(-0.25), "-0.2500000000");
        assert_eq!(fmt(0.0), "0.0000000000");
    }

    #[test]
    fn table_bytes() {
        let mut t = Table::new("x.csv", &["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_bytes().unwrap(), b"a,b\n1,2\n");
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
