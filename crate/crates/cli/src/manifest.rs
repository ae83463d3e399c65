use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{read_bytes, write_text, CliError, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to rerun a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument list, replayable with `icu-attend replay`.
    pub args: Vec<String>,
    /// Resolved flag values.
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    /// SHA-256 over the input files' names and contents.
    pub dataset_digest: String,
    pub artifact_version: String,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(CliError::Json)?;
        write_text(path, &(text + "\n"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&crate::read_text(path)?).map_err(CliError::Json)
    }
}

/// Digest of files in the given order; names are hashed by file name only so
/// moving a dataset does not change it.
pub fn digest_files(files: &[PathBuf]) -> Result<String> {
    let mut hasher = Sha256::new();
    for f in files {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        let bytes = read_bytes(f)?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
