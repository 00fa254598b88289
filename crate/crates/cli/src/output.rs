//! Run manifests and all-or-nothing output writing.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Contains no timestamps, so an
/// identical invocation writes an identical manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, InputDigest>,
    pub outputs: BTreeMap<String, InputDigest>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: impl Serialize, seed: Option<u64>) -> Result<Self, CliError> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }

    pub fn input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.inputs.insert(role.to_string(), digest(path, bytes));
    }
}

fn digest(path: &Path, bytes: &[u8]) -> InputDigest {
    InputDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(bytes)),
    }
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<(String, Vec<u8>), CliError> {
    let bytes = read_input(path)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::usage(format!("{}: not valid UTF-8", path.display())))?;
    Ok((text, bytes))
}

/// `out.jsonl` -> `out.jsonl.manifest.json`
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Output files staged in temporaries beside their targets and renamed
/// into place only once every file has been written.
#[derive(Default)]
pub struct Staged {
    files: Vec<(PathBuf, NamedTempFile)>,
    written: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, path: &Path, bytes: Vec<u8>) -> Result<(), CliError> {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let io = |e: std::io::Error| CliError::usage(format!("{}: {e}", path.display()));
        let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(&bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        self.files.push((path.to_path_buf(), tmp));
        self.written.push((path.to_path_buf(), bytes));
        Ok(())
    }

    /// Stages the manifest next to `primary`, then commits everything.
    pub fn commit(mut self, mut manifest: RunManifest, primary: &Path) -> Result<(), CliError> {
        for (path, bytes) in &self.written {
            manifest.outputs.insert(path.display().to_string(), digest(path, bytes));
        }
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        self.add(&manifest_path(primary), text.into_bytes())?;
        for (path, tmp) in self.files {
            tmp.persist(&path)
                .map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.error)))?;
        }
        Ok(())
    }
}
