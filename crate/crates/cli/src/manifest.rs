use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Record of one invocation. Contains nothing time- or host-dependent, so
/// identical inputs give a byte-identical manifest.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    /// SHA-256 of the input spec file, or of the generated spec for `construct`.
    pub spec_digest: Option<String>,
    pub parameters: Value,
    pub outputs: Vec<String>,
    pub results: Value,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects output files as they are written.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, &s)
    }

    /// Writes `<subcommand>.manifest.json` listing every file written so far.
    pub fn finish(
        mut self,
        subcommand: &str,
        spec_digest: Option<String>,
        parameters: Value,
        results: Value,
    ) -> anyhow::Result<()> {
        let name = format!("{subcommand}.manifest.json");
        let mut outputs = self.files.clone();
        outputs.push(name.clone());
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec_digest,
            parameters,
            outputs,
            results,
        };
        self.write_json(&name, &manifest)
    }
}
