use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const MANIFEST_FILE: &str = "manifest.json";

/// What a command read, wrote and was configured with. One per output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub args: Vec<String>,
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    /// Command-specific results such as overrun counts.
    pub results: Value,
}

pub struct ManifestBuilder {
    manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        let started_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        ManifestBuilder {
            manifest: RunManifest {
                command: command.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                args: std::env::args().collect(),
                config: serde_json::to_value(config).expect("config serializes"),
                inputs: Vec::new(),
                outputs: Vec::new(),
                started_unix_s,
                wall_clock_s: 0.0,
                results: Value::Null,
            },
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.manifest.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        self.manifest.outputs.push(name.into());
        self
    }

    pub fn results(&mut self, results: Value) -> &mut Self {
        self.manifest.results = results;
        self
    }

    pub fn write(&mut self, dir: &Path) -> Result<()> {
        self.manifest.wall_clock_s = self.started.elapsed().as_secs_f64();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
