//! JSON run report written next to every command's artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Version of the binary and of the source tree it was built from.
pub fn artifact_version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("MAGIC_BULLET_GIT_REV"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub outputs: serde_json::Value,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunReport {
    pub fn path_in(dir: &Path, command: &str) -> PathBuf {
        dir.join(format!("{command}_report.json"))
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = Self::path_in(dir, &self.command);
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
