//! Run manifests: every command records its resolved parameters, input
//! digests and outputs next to what it writes, so any run can be repeated
//! bit-for-bit from the recorded settings.

use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use crate::util::write_atomic;

#[derive(Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: Value,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Value) -> Self {
        RunManifest {
            tool: "molfield".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path, sha256: &str) {
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: sha256.into(),
        });
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write `<output>.manifest.json` (or `manifest.json` inside a
    /// directory output).
    pub fn write_for(&self, output: &Path) -> Result<()> {
        let path = if output.is_dir() {
            output.join("manifest.json")
        } else {
            let mut name = output.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            output.with_file_name(name)
        };
        let body = serde_json::to_string_pretty(self)?;
        write_atomic(&path, body.as_bytes())
    }
}
