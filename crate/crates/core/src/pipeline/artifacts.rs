//! Output directory handling: exclusive lock, checked writes, digests and the
//! run manifest.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, Result, Stage};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| PipelineError::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    /// Input path → digest.
    pub inputs: BTreeMap<String, String>,
    /// Artifact path relative to the output directory → digest.
    pub artifacts: BTreeMap<String, String>,
    /// Stage → artifact paths it wrote.
    pub stages: BTreeMap<Stage, Vec<String>>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
        Ok(serde_json::from_slice(&text)?)
    }
}

/// An output directory owned exclusively for the lifetime of the value.
pub struct OutputDir {
    root: PathBuf,
    lock: PathBuf,
    written: BTreeMap<String, String>,
    current: Option<Stage>,
    by_stage: BTreeMap<Stage, Vec<String>>,
}

impl OutputDir {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| PipelineError::io(root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                return Err(PipelineError::Locked { path: lock });
            }
            Err(e) => return Err(PipelineError::io(&lock, e)),
        }
        Ok(OutputDir {
            root: root.to_path_buf(),
            lock,
            written: BTreeMap::new(),
            current: None,
            by_stage: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn begin_stage(&mut self, stage: Stage) -> Result<()> {
        self.current = Some(stage);
        self.by_stage.insert(stage, Vec::new());
        let dir = self.path(stage.name());
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))
    }

    /// Path of an artifact that must already exist.
    pub fn require(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.exists() {
            Ok(p)
        } else {
            Err(PipelineError::MissingArtifact { path: p })
        }
    }

    /// Record a file written by the current stage.
    pub fn track(&mut self, rel: &str) -> Result<()> {
        let digest = sha256_file(&self.path(rel))?;
        self.written.insert(rel.to_string(), digest);
        if let Some(s) = self.current {
            self.by_stage.entry(s).or_default().push(rel.to_string());
        }
        Ok(())
    }

    fn ensure_parent(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
        Ok(p)
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let p = self.ensure_parent(rel)?;
        fs::write(&p, bytes).map_err(|e| PipelineError::io(&p, e))?;
        self.track(rel)?;
        Ok(p)
    }

    /// Write pretty JSON, then re-read and compare.
    pub fn write_json<T>(&mut self, rel: &str, value: &T) -> Result<PathBuf>
    where
        T: Serialize + DeserializeOwned + PartialEq,
    {
        let text = serde_json::to_string_pretty(value)? + "\n";
        let p = self.write_bytes(rel, text.as_bytes())?;
        let back: T = read_json(&p)?;
        if &back != value {
            return Err(PipelineError::SelfCheck {
                path: p,
                reason: "JSON does not round-trip".into(),
            });
        }
        Ok(p)
    }

    /// Write through a callback, then track.
    pub fn write_with<F>(&mut self, rel: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&Path) -> Result<()>,
    {
        let p = self.ensure_parent(rel)?;
        f(&p)?;
        self.track(rel)?;
        Ok(p)
    }

    /// Merge this run's artifacts into the manifest on disk and rewrite it.
    pub fn finish(&mut self, config_sha256: String, inputs: BTreeMap<String, String>) -> Result<RunManifest> {
        let path = self.path(MANIFEST_FILE);
        let mut manifest = if path.exists() {
            RunManifest::load(&path).unwrap_or_default()
        } else {
            RunManifest::default()
        };
        for (stage, files) in &self.by_stage {
            if let Some(old) = manifest.stages.remove(stage) {
                for f in old {
                    manifest.artifacts.remove(&f);
                }
            }
            manifest.stages.insert(*stage, files.clone());
        }
        manifest.artifacts.extend(self.written.clone());
        manifest.config_sha256 = config_sha256;
        manifest.inputs = inputs;
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
        Ok(manifest)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputDir::open(dir.path()).unwrap();
        assert!(matches!(OutputDir::open(dir.path()), Err(PipelineError::Locked { .. })));
        drop(a);
        OutputDir::open(dir.path()).unwrap();
    }

    #[test]
    fn manifest_replaces_rerun_stage_entries() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut out = OutputDir::open(dir.path()).unwrap();
            out.begin_stage(Stage::Ingest).unwrap();
            out.write_bytes("ingest/a.txt", b"a").unwrap();
            out.write_bytes("ingest/b.txt", b"b").unwrap();
            out.finish("x".into(), BTreeMap::new()).unwrap();
        }
        let mut out = OutputDir::open(dir.path()).unwrap();
        out.begin_stage(Stage::Ingest).unwrap();
        out.write_bytes("ingest/a.txt", b"a2").unwrap();
        let m = out.finish("x".into(), BTreeMap::new()).unwrap();
        assert_eq!(m.artifacts.len(), 1);
        assert_eq!(m.artifacts["ingest/a.txt"], sha256_bytes(b"a2"));
        assert!(!dir.path().join("ingest/b.txt").exists());
    }
}
