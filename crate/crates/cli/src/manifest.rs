//! Output bundles: every file written by a run is hashed and listed in a
//! `manifest.json` next to it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use comb_core::canonical_json;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = concat!("comb ", env!("CARGO_PKG_VERSION"));

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Path relative to the bundle directory, with `/` separators.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub spec_hash: String,
    pub tool_version: String,
    pub outputs: Vec<OutputRecord>,
    pub passed: bool,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A directory collecting the files of one run.
#[derive(Debug)]
pub struct Bundle {
    root: PathBuf,
    outputs: Vec<OutputRecord>,
}

impl Bundle {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Bundle { root, outputs: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputRecord { path: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, canonical_json(value)?.as_bytes())
    }

    /// Writes `manifest.json` listing every output so far, sorted by path.
    pub fn finish(
        mut self,
        command: &str,
        parameters: BTreeMap<String, serde_json::Value>,
        seed: u64,
        spec_hash: String,
        passed: bool,
    ) -> Result<RunManifest> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            spec_hash,
            tool_version: TOOL_VERSION.to_string(),
            outputs: self.outputs,
            passed,
        };
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, canonical_json(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

/// Re-hashes every listed output and returns the paths whose content differs.
pub fn verify_manifest(root: &Path, manifest: &RunManifest) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for o in &manifest.outputs {
        let bytes = fs::read(root.join(&o.path)).with_context(|| format!("reading {}", o.path))?;
        if sha256_hex(&bytes) != o.sha256 {
            bad.push(o.path.clone());
        }
    }
    Ok(bad)
}
