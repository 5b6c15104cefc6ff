//! CSV tables, checksums and the run manifest.
//!
//! The manifest, with the checksum of every table, is written before the
//! tables themselves; a table whose bytes do not match its manifest entry is
//! not a valid result.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fixed 17 significant digits, so equal values always print identically.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// An in-memory CSV table with a mandatory header row.
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub artifact_version: String,
    pub config: RunConfig,
    pub generator: String,
    pub dim: Vec<usize>,
    pub truncated_trace: Vec<f64>,
    pub failed_rows: usize,
    pub timing: Timing,
    /// Command-specific results that are not tables.
    pub summary: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

/// Fills in the output records, writes `manifest.json`, then the files.
/// `extra` holds non-CSV outputs (name, bytes).
pub fn emit(
    dir: &Path,
    mut manifest: RunManifest,
    tables: &[Table],
    extra: &[(String, Vec<u8>)],
) -> CliResult<RunManifest> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files: Vec<(String, Vec<u8>, usize)> = tables
        .iter()
        .map(|t| (t.name.clone(), t.to_bytes(), t.len()))
        .collect();
    files.extend(extra.iter().map(|(n, b)| (n.clone(), b.clone(), 0)));
    manifest.outputs = files
        .iter()
        .map(|(name, bytes, rows)| OutputRecord {
            file: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
            rows: *rows,
        })
        .collect();
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join("manifest.json"), text.as_bytes())?;
    for (name, bytes, _) in &files {
        write_file(&dir.join(name), bytes)?;
    }
    Ok(manifest)
}

/// Reads `manifest.json` and checks every listed output against its checksum.
pub fn verify(dir: &Path) -> CliResult<RunManifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("manifest {}: {e}", path.display())))?;
    for out in &manifest.outputs {
        let p = dir.join(&out.file);
        let bytes = std::fs::read(&p).map_err(io_err(&p))?;
        if sha256_hex(&bytes) != out.sha256 {
            return Err(CliError::Config(format!(
                "{} does not match its manifest checksum",
                out.file
            )));
        }
    }
    Ok(manifest)
}
