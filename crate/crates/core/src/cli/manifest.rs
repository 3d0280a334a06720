use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        Self {
            path: path.into(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len() as u64,
        }
    }

    pub fn of_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::of_bytes(path.display().to_string(), &bytes))
    }
}

/// Record of one invocation, written as `<command>.manifest.json` in the
/// output directory. Output paths are relative to that directory.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// Value of `RECSYS_LENS_THREADS`, when set.
    pub threads: Option<usize>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_ms: u64,
}

/// Tracks files written into one output directory.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<FileDigest>,
    inputs: Vec<FileDigest>,
    started: Instant,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            inputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let digest = FileDigest::of_file(path)?;
        if !self.inputs.contains(&digest) {
            self.inputs.push(digest);
        }
        Ok(())
    }

    pub fn input_bytes(&mut self, label: &str, bytes: &[u8]) {
        self.inputs.push(FileDigest::of_bytes(label, bytes));
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.retain(|d| d.path != name);
        self.written.push(FileDigest::of_bytes(name, bytes));
        Ok(path)
    }

    /// Buffers whatever `fill` writes, then stores it as `name`.
    pub fn write_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<PathBuf> {
        let mut buf = Vec::new();
        fill(&mut buf).map_err(|e| Error::io(self.dir.join(name), e))?;
        self.write(name, &buf)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Compute(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn outputs(&self) -> &[FileDigest] {
        &self.written
    }

    /// Writes the manifest and returns its path.
    pub fn finish(
        mut self,
        command: &str,
        argv: Vec<String>,
        config: serde_json::Value,
        seeds: Vec<u64>,
        threads: Option<usize>,
    ) -> Result<PathBuf> {
        self.written.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv,
            config,
            seeds,
            threads,
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.written),
            duration_ms: self.started.elapsed().as_millis() as u64,
        };
        let name = format!("{command}.manifest.json");
        let path = self.dir.join(&name);
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Compute(format!("serializing manifest: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        let d = FileDigest::of_bytes("x", b"");
        assert_eq!(
            d.sha256,
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(d.bytes, 0);
    }

    #[test]
    fn manifest_lists_every_output() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::create(dir.path()).unwrap();
        out.write("b.txt", b"b").unwrap();
        out.write("sub/a.txt", b"a").unwrap();
        out.write("b.txt", b"bb").unwrap();
        let path = out
            .finish("test", vec!["x".into()], serde_json::json!({"k": 1}), vec![7], None)
            .unwrap();
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        let outputs = m["outputs"].as_array().unwrap();
        assert_eq!(outputs.len(), 2);
        assert_eq!(outputs[0]["path"], "b.txt");
        assert_eq!(outputs[0]["bytes"], 2);
        assert_eq!(outputs[1]["path"], "sub/a.txt");
        assert_eq!(m["schema_version"], 1);
        assert_eq!(m["seeds"][0], 7);
    }
}
