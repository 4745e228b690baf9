//! Run manifests written next to every output file.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{Command, MODEL_FORMAT};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub model_format: &'static str,
    /// Command line as given, minus the program name; replaying it regenerates the outputs.
    pub argv: Vec<String>,
    /// Every flag after defaults were applied.
    pub command: &'a Command,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl<'a> Manifest<'a> {
    pub fn new(argv: &[String], command: &'a Command, inputs: &[&Path], outputs: Vec<PathBuf>) -> Result<Self> {
        let inputs = inputs
            .iter()
            .map(|p| Ok(InputDigest { path: p.to_path_buf(), sha256: sha256_file(p)? }))
            .collect::<Result<_>>()?;
        Ok(Manifest {
            tool: "chainvar",
            version: env!("CARGO_PKG_VERSION"),
            model_format: MODEL_FORMAT,
            argv: argv.to_vec(),
            command,
            inputs,
            outputs,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// `<file>.manifest.json` next to an output file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}
