use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "chimera-bench";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// A 64-bit seed keyed by a label, stable across platforms and runs.
pub fn derive_seed(label: &str) -> u64 {
    let d = Sha256::digest(label.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// Version and configuration stamp carried by every output file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
}

impl Stamp {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Stamp { tool: TOOL.into(), version: VERSION.into(), config_hash: config_hash.into() }
    }

    /// Leading comment line for CSV outputs.
    pub fn csv_comment(&self) -> String {
        format!("# {} {} config {}\n", self.tool, self.version, self.config_hash)
    }
}

/// Write through a temporary sibling so an interrupted write never leaves a
/// truncated file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub task: String,
    pub error: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub numerical: bool,
}

impl Failure {
    pub fn new(task: impl Into<String>, error: &CliError) -> Self {
        Failure { task: task.into(), error: error.to_string(), numerical: matches!(error, CliError::Numerical(_)) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub stage: String,
    pub files: Vec<FileEntry>,
    #[serde(default)]
    pub failures: Vec<Failure>,
}

/// Files under `dir` with the given extension, sorted, excluding manifests
/// and partial writes.
pub fn list_files(dir: &Path, extension: &str) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry?;
        let p = entry.path();
        if entry.file_type().is_file()
            && p.extension().is_some_and(|e| e == extension)
            && p.file_name().is_some_and(|n| n != MANIFEST)
        {
            out.push(p.to_path_buf());
        }
    }
    Ok(out)
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

/// Hash every file under `dir` (except the manifest itself) and write
/// `dir/manifest.json`.
pub fn write_manifest(dir: &Path, stage: &str, stamp: &Stamp, mut failures: Vec<Failure>) -> CliResult<Manifest> {
    let mut files = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry?;
        let p = entry.path();
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if entry.file_type().is_file() && name != MANIFEST && !name.ends_with(".partial") {
            files.push(FileEntry { path: relative(dir, p), sha256: file_sha256(p)? });
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    failures.sort_by(|a, b| a.task.cmp(&b.task));
    let manifest = Manifest { stamp: stamp.clone(), stage: stage.into(), files, failures };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

impl Manifest {
    /// Turn recorded failures into the command's error, after the manifest
    /// has been written.
    pub fn into_result(self) -> CliResult<Manifest> {
        if self.failures.is_empty() {
            return Ok(self);
        }
        let msg = format!("{}: {} task(s) failed, see {MANIFEST}", self.stage, self.failures.len());
        if self.failures.iter().all(|f| f.numerical) {
            Err(CliError::Numerical(msg))
        } else {
            Err(CliError::Data(msg))
        }
    }
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    read_json(&dir.join(MANIFEST))
}
