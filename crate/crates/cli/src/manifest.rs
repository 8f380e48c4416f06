//! Output files and the `manifest.json` that records them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub reflekt_core: &'static str,
    pub reflekt_cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputEntry>,
    pub summary: serde_json::Map<String, serde_json::Value>,
}

/// Collects files written under one output directory.
pub struct Run {
    dir: PathBuf,
    command: String,
    seed: u64,
    config_sha256: String,
    started: Instant,
    outputs: Vec<OutputEntry>,
    pub summary: serde_json::Map<String, serde_json::Value>,
}

impl Run {
    pub fn start(dir: &Path, command: &str, seed: u64, canonical_config: &str) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut run = Run {
            dir: dir.to_path_buf(),
            command: command.into(),
            seed,
            config_sha256: sha256_hex(canonical_config.as_bytes()),
            started: Instant::now(),
            outputs: Vec::new(),
            summary: serde_json::Map::new(),
        };
        run.write("config.toml", canonical_config)?;
        Ok(run)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputEntry {
            file: name.into(),
            bytes: contents.len(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn finish(self) -> Result<Manifest> {
        let manifest = Manifest {
            command: self.command,
            seed: self.seed,
            config_sha256: self.config_sha256,
            versions: Versions { reflekt_core: reflekt_core::VERSION, reflekt_cli: env!("CARGO_PKG_VERSION") },
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
            summary: self.summary,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}
