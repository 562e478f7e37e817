//! Output files and their `.manifest.json` sidecars.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use muentropy::polytope::SystemSpec;

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub spec_hash: Option<String>,
    pub config: Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub wall_time_s: f64,
}

/// Hex SHA-256 of the normalized spec, so equivalent inputs hash alike.
pub fn spec_hash(spec: &SystemSpec) -> String {
    let digest = Sha256::digest(spec.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Run {
    command: String,
    spec_hash: Option<String>,
    config: Value,
    seed: Option<u64>,
    start: Instant,
}

impl Run {
    pub fn new(command: String) -> Self {
        Self {
            command,
            spec_hash: None,
            config: Value::Null,
            seed: None,
            start: Instant::now(),
        }
    }

    pub fn with_spec(mut self, spec: &SystemSpec) -> Self {
        self.spec_hash = Some(spec_hash(spec));
        self
    }

    pub fn with_config<C: Serialize>(mut self, config: &C) -> Self {
        self.config = serde_json::to_value(config).unwrap_or(Value::Null);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn manifest(&self) -> RunManifest {
        RunManifest {
            command: self.command.clone(),
            spec_hash: self.spec_hash.clone(),
            config: self.config.clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: self.start.elapsed().as_secs_f64(),
        }
    }

    pub fn write(&self, path: &Path, contents: &str) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, contents).map_err(|e| CliError::io(path, e))?;
        let sidecar = manifest_path(path);
        let text = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        fs::write(&sidecar, text + "\n").map_err(|e| CliError::io(&sidecar, e))
    }

    pub fn write_csv(&self, path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
        let mut text = String::with_capacity(64 * (rows.len() + 1));
        text.push_str(header);
        text.push('\n');
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        self.write(path, &text)
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("result serializes");
        self.write(path, &(text + "\n"))
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn row(values: &[f64]) -> String {
    values.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(",")
}
