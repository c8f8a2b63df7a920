use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub tool_version: String,
    pub config_sha256: Option<String>,
    pub inputs: Vec<InputHash>,
    pub timestamp_unix_s: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new() -> Self {
        RunManifest {
            command_line: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: None,
            inputs: Vec::new(),
            timestamp_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn set_config<T: Serialize>(&mut self, config: &T) {
        let text = serde_json::to_string(config).expect("configuration serializes");
        self.config_sha256 = Some(sha256_hex(text.as_bytes()));
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        let path = dir.join("manifest.json");
        std::fs::write(&path, text + "\n")
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
    }
}
