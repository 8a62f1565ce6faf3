use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Engine;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

/// A file written by `run`, relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
}

/// Records of one realization or trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSet {
    pub index: usize,
    pub counts: Artifact,
    /// Measured photocurrent.
    pub current: Artifact,
    /// Conditional mean of the current (quantum engine).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_current: Option<Artifact>,
    /// Conditional counting rate (quantum engine).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counting_rate: Option<Artifact>,
}

impl RecordSet {
    pub fn artifacts(&self) -> impl Iterator<Item = &Artifact> {
        [Some(&self.counts), Some(&self.current), self.expected_current.as_ref(), self.counting_rate.as_ref()].into_iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub engine: Engine,
    pub config_hash: String,
    pub seed: u64,
    pub lo_phase: f64,
    pub config: Artifact,
    pub records: Vec<RecordSet>,
    pub wall_clock_seconds: f64,
}

/// Write `text` under `dir` and describe it.
pub fn write_artifact(dir: &Path, rel: &str, text: &str) -> CliResult<Artifact> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(Artifact { path: rel.to_string(), bytes: text.len() as u64 })
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }

    /// Load the manifest of run directory `dir` and check that every listed
    /// artifact exists with its recorded length.
    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Runtime(format!("missing manifest {}: {e}", path.display())))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        for a in std::iter::once(&m.config).chain(m.records.iter().flat_map(RecordSet::artifacts)) {
            let p = dir.join(&a.path);
            let len = std::fs::metadata(&p).map_err(|e| CliError::Runtime(format!("missing artifact {}: {e}", p.display())))?.len();
            if len != a.bytes {
                return Err(CliError::Runtime(format!("artifact {} has {len} bytes, manifest says {}", p.display(), a.bytes)));
            }
        }
        Ok(m)
    }

    pub fn read(dir: &Path, a: &Artifact) -> CliResult<String> {
        let p: PathBuf = dir.join(&a.path);
        std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))
    }
}
