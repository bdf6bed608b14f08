//! Run artifacts: CSV curves, JSON reports, and the manifest tying a run's
//! outputs together.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Summary of a completed run: what was executed, with which configuration,
/// and where the artifacts landed. Written last, as `manifest.json`, and only
/// after every listed output has been verified to exist.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub code_version: String,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

/// Collects a run's artifacts under one output directory. CSV floats are
/// written with 17 significant digits so reruns with the same config and seed
/// are bit-identical; wall time lives only in the manifest.
pub struct RunWriter {
    out_dir: PathBuf,
    experiment: String,
    outputs: Vec<String>,
    started: Instant,
}

impl RunWriter {
    pub fn new(out_dir: &Path, experiment: &str) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(RunWriter {
            out_dir: out_dir.to_path_buf(),
            experiment: experiment.to_string(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    fn register(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, content)?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    /// Writes a prebuilt CSV body (header row included by the caller).
    pub fn write_csv(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        self.register(name, content)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.register(name, &text)
    }

    /// Verifies every registered output exists, then writes the manifest.
    pub fn finish(self, cfg: &ExperimentConfig) -> Result<RunManifest> {
        for name in &self.outputs {
            let path = self.out_dir.join(name);
            if !path.is_file() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("claimed output missing: {}", path.display()),
                )));
            }
        }
        let manifest = RunManifest {
            experiment: self.experiment,
            config: cfg.clone(),
            seed: cfg.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.out_dir.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_existing_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::new(dir.path(), "demo").unwrap();
        w.write_csv("curve.csv", "s,y\n0,1\n").unwrap();
        w.write_json("report.json", &serde_json::json!({"pass": true})).unwrap();
        let cfg = ExperimentConfig::default();
        let m = w.finish(&cfg).unwrap();
        assert_eq!(m.outputs, vec!["curve.csv", "report.json"]);
        assert!(dir.path().join("manifest.json").is_file());
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(text.contains("\"experiment\": \"demo\""));
    }

    #[test]
    fn missing_output_fails_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::new(dir.path(), "demo").unwrap();
        let path = w.write_csv("curve.csv", "s,y\n").unwrap();
        std::fs::remove_file(path).unwrap();
        assert!(w.finish(&ExperimentConfig::default()).is_err());
    }
}
