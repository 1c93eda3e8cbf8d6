//! Run manifests and atomic output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mlread::SystemParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// `sha256("blob <len>\0" + content)`, the way git names a blob.
pub fn git_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, content: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder
        .tempfile_in(dir)
        .with_context(|| format!("cannot create a file in {}", dir.display()))?;
    tmp.write_all(content)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the manifest's directory.
    pub path: String,
    /// `name@version`.
    pub schema: String,
    /// CSV header, empty for other formats.
    pub columns: Vec<String>,
    pub sha256: String,
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInputs {
    pub schema_version: u32,
    pub subcommand: String,
    pub options: serde_json::Value,
    pub config: SystemParams,
    pub seed: u64,
    pub trials: Option<u64>,
    pub postselect_stuck: bool,
}

impl RunInputs {
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("inputs serialize");
        git_hash(&json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub inputs: RunInputs,
    pub input_hash: String,
    pub outputs: Vec<OutputFile>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn file_name(subcommand: &str) -> String {
        format!("{}.manifest.json", subcommand.replace(' ', "-"))
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(Self::file_name(&self.inputs.subcommand));
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        write_atomic(&path, &json)?;
        Ok(path)
    }

    /// Reads a manifest and checks its input hash and every output hash.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let src = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        let m: RunManifest = serde_json::from_slice(&src)
            .with_context(|| format!("{} is not a run manifest", path.display()))?;
        if m.inputs.hash() != m.input_hash {
            bail!("{}: input hash does not match its inputs", path.display());
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        for out in &m.outputs {
            let p = dir.join(&out.path);
            let bytes = fs::read(&p).with_context(|| format!("cannot read {}", p.display()))?;
            if git_hash(&bytes) != out.sha256 {
                bail!("{} changed since the run", p.display());
            }
        }
        Ok(m)
    }
}
