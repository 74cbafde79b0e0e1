//! Run manifests: everything needed to repeat a command bit for bit.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FILE_NAME: &str = "manifest.json";

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

/// Digest over `(file name, contents)` of each file, in the given order.
pub fn sha256_files(paths: &[PathBuf]) -> Result<String> {
    let mut h = Sha256::new();
    for p in paths {
        let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    /// Effective settings after defaults, file, environment and flags.
    pub config: Map<String, Value>,
    pub seeds: Map<String, Value>,
    /// Input path to checksum.
    pub inputs: Vec<(String, String)>,
    /// Files this run will write.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> String {
        let inputs: Map<String, Value> = self
            .inputs
            .iter()
            .map(|(p, h)| (p.clone(), Value::String(h.clone())))
            .collect();
        let v = json!({
            "command": self.command,
            "args": self.args,
            "config": self.config,
            "seeds": self.seeds,
            "inputs_sha256": inputs,
            "artifacts": self.artifacts,
            "tool_version": env!("CARGO_PKG_VERSION"),
        });
        let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))
    }
}
