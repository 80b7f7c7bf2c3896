//! Run manifest written alongside every command's outputs.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::{runtime, CliResult};

/// Everything needed to reproduce a run: the command, its fully resolved
/// configuration, the seed, the tool version, and the produced files.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub jobs: usize,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub started_unix_s: u64,
    pub wall_clock_ms: f64,
}

pub struct ManifestBuilder {
    command: String,
    seed: u64,
    jobs: usize,
    started: Instant,
    started_unix_s: u64,
    outputs: Vec<String>,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: u64, jobs: usize) -> Self {
        Self {
            command: command.to_string(),
            seed,
            jobs,
            started: Instant::now(),
            started_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `manifest.json` atomically into the output directory.
    pub fn write(self, out_dir: &Path, config: serde_json::Value) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            jobs: self.jobs,
            config,
            outputs: self.outputs,
            started_unix_s: self.started_unix_s,
            wall_clock_ms: self.started.elapsed().as_secs_f64() * 1e3,
        };
        let path = out_dir.join("manifest.json");
        let mut body = serde_json::to_string_pretty(&manifest)
            .map_err(|e| crate::error::CliError::Runtime(format!("manifest: {e}")))?;
        body.push('\n');
        runtime(ropescale::io::write_atomic(&path, body.as_bytes()))?;
        Ok(path)
    }
}
