use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

/// Written next to every output; `command` replays the run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub tool_version: &'static str,
    pub seed: u64,
    pub jobs: usize,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_at: String,
    pub elapsed_s: f64,
    #[serde(skip)]
    clock: Option<Instant>,
}

impl RunManifest {
    pub fn start(seed: u64, jobs: usize) -> Self {
        Self {
            command: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            jobs,
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            elapsed_s: 0.0,
            clock: Some(Instant::now()),
        }
    }

    pub fn io(&mut self, inputs: &[&Path], outputs: &[&Path]) {
        self.inputs = inputs.iter().map(|p| p.to_path_buf()).collect();
        self.outputs = outputs.iter().map(|p| p.to_path_buf()).collect();
    }

    pub fn snapshot(&mut self, config: serde_json::Value) {
        self.config = config;
    }

    fn write(&mut self, path: &Path) -> anyhow::Result<()> {
        self.elapsed_s = self.clock.map_or(0.0, |c| c.elapsed().as_secs_f64());
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// `manifest.json` inside an output directory.
    pub fn write_in(&mut self, dir: &Path) -> anyhow::Result<()> {
        self.write(&dir.join("manifest.json"))
    }

    /// `<file>.manifest.json` next to an output file.
    pub fn write_beside(&mut self, file: &Path) -> anyhow::Result<()> {
        let mut name = file.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        self.write(&file.with_file_name(name))
    }
}
