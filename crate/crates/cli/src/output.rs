//! Run directories and their manifests.

use std::path::{Path, PathBuf};

use channel_control::Result;
use serde::Serialize;
use serde_json::json;

/// Output directory of one run; records every file written to it.
pub struct RunDir {
    path: PathBuf,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self> {
        std::fs::create_dir_all(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.path.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    pub fn write_vector(&mut self, name: &str, v: &[f64]) -> Result<()> {
        channel_control::market::write_vector(self.path.join(name), v)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json`: the command, the fully resolved settings,
    /// the random seed (if any), program versions and the files produced.
    pub fn finish<T: Serialize>(mut self, command: &str, settings: &T, seed: Option<u64>) -> Result<()> {
        let manifest = json!({
            "program": "chanctl",
            "version": env!("CARGO_PKG_VERSION"),
            "library_version": channel_control::VERSION,
            "command": command,
            "settings": settings,
            "seed": seed,
            "outputs": self.outputs,
        });
        self.outputs.clear();
        self.write_json("manifest.json", &manifest)
    }
}
