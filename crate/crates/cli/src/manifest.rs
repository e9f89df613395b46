//! Per-run provenance record written next to a command's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_NAME: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub version: &'static str,
    pub seeds: Vec<u64>,
    pub parameters: BTreeMap<String, String>,
    /// Input path → SHA-256 of its bytes (directories hash every regular
    /// file in name order, skipping earlier run manifests).
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start() -> Self {
        RunManifest {
            command: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION"),
            seeds: Vec::new(),
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Stamps the elapsed time and writes the manifest atomically.
    pub fn finish(mut self, path: &Path) -> Result<(), CliError> {
        if let Some(t) = self.started {
            self.wall_clock_seconds = t.elapsed().as_secs_f64();
        }
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        gmse_core::io::write_atomic(path, text.as_bytes())?;
        Ok(())
    }
}

fn hash_path(path: &Path) -> Result<String, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n != MANIFEST_NAME))
            .collect();
        files.sort();
        for f in files {
            hasher.update(f.file_name().unwrap().to_string_lossy().as_bytes());
            hasher.update([0u8]);
            hasher.update(fs::read(&f).map_err(io)?);
        }
    } else {
        hasher.update(fs::read(path).map_err(io)?);
    }
    Ok(format!("{:x}", hasher.finalize()))
}
