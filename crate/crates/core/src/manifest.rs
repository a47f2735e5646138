//! `manifest.json`: what was run, with which configuration, and SHA-256
//! digests of every file it produced.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SimConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Subcommand-specific settings not held in the config (R, seed, sweep grid).
    pub parameters: serde_json::Value,
    pub config: SimConfig,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, config: &SimConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
            outputs: Vec::new(),
        }
    }

    /// Digests `dir/name` and appends it to the output list.
    pub fn record(&mut self, dir: &Path, name: &str) -> Result<()> {
        let (sha256, bytes) = sha256_file(&dir.join(name))?;
        self.outputs.push(OutputRecord {
            path: PathBuf::from(name),
            sha256,
            bytes,
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Paths (relative) whose current content no longer matches the recorded
    /// digest or size. Missing files count as mismatches.
    pub fn verify(&self, dir: &Path) -> Vec<PathBuf> {
        self.outputs
            .iter()
            .filter(|rec| match sha256_file(&dir.join(&rec.path)) {
                Ok((digest, bytes)) => digest != rec.sha256 || bytes != rec.bytes,
                Err(_) => true,
            })
            .map(|rec| rec.path.clone())
            .collect()
    }
}
