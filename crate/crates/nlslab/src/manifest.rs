//! Run manifests: parameters, certificates, content hashes of every emitted
//! file, and wall-clock timings, serialized as JSON.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    /// Certificates by name (ground-state residual, lambda1, c_min, ...).
    pub certificates: BTreeMap<String, serde_json::Value>,
    pub files: Vec<FileEntry>,
    pub timings_s: BTreeMap<String, f64>,
    /// "completed" or "aborted".
    pub status: String,
    pub abort_reason: Option<String>,
    #[serde(skip)]
    started: Instant,
}

impl RunManifest {
    pub fn new(command: &str, parameters: impl Serialize) -> Result<Self> {
        Ok(Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            parameters: serde_json::to_value(parameters)?,
            certificates: BTreeMap::new(),
            files: Vec::new(),
            timings_s: BTreeMap::new(),
            status: "completed".to_string(),
            abort_reason: None,
            started: Instant::now(),
        })
    }

    pub fn add_certificate(&mut self, name: &str, value: impl Serialize) -> Result<()> {
        self.certificates.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Hash an emitted file and record it.
    pub fn add_file(&mut self, path: &Path) -> Result<()> {
        self.files.push(FileEntry {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn add_timing(&mut self, name: &str, seconds: f64) {
        self.timings_s.insert(name.to_string(), seconds);
    }

    pub fn mark_aborted(&mut self, reason: &str) {
        self.status = "aborted".to_string();
        self.abort_reason = Some(reason.to_string());
    }

    /// Record total elapsed time and write the manifest JSON.
    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.add_timing("total", self.started.elapsed().as_secs_f64());
        let json = serde_json::to_string_pretty(&self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(format!("{digest:x}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_files_with_stable_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data.csv");
        std::fs::write(&data, "t,mass\n0,1\n").unwrap();

        let mut m = RunManifest::new("test", serde_json::json!({"p": 7.0})).unwrap();
        m.add_certificate("lambda1", 2.905).unwrap();
        m.add_file(&data).unwrap();
        let out = dir.path().join("manifest.json");
        m.write(&out).unwrap();

        let text = std::fs::read_to_string(&out).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["status"], "completed");
        assert_eq!(v["files"][0]["sha256"], sha256_file(&data).unwrap());
        assert!(v["timings_s"]["total"].as_f64().unwrap() >= 0.0);

        // Identical content, identical hash (determinism contract).
        let data2 = dir.path().join("data2.csv");
        std::fs::write(&data2, "t,mass\n0,1\n").unwrap();
        assert_eq!(sha256_file(&data).unwrap(), sha256_file(&data2).unwrap());
    }

    #[test]
    fn aborted_status_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("evolve", serde_json::json!({})).unwrap();
        m.mark_aborted("monitor overflow: mass drift 2.3e-7 at t = 1.5");
        let out = dir.path().join("manifest.json");
        m.write(&out).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["status"], "aborted");
        assert!(v["abort_reason"].as_str().unwrap().contains("mass drift"));
    }
}
