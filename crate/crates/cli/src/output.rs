//! Atomic output files and the per-run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Collects everything a run reads and writes; [`Run::finish`] emits
/// `manifest.json` next to the outputs.
pub struct Run {
    dir: PathBuf,
    command: Vec<String>,
    seed: Option<u64>,
    config: Value,
    inputs: Vec<Value>,
    outputs: Vec<String>,
    started: Instant,
}

impl Run {
    pub fn new(dir: &Path, command: Vec<String>, seed: Option<u64>) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e.to_string()))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            command,
            seed,
            config: Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn set_config(&mut self, config: Value) {
        self.config = config;
    }

    /// Reads an input file and records its SHA-256 digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e.to_string()))?;
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.push(json!({"path": path.display().to_string(), "sha256": digest}));
        Ok(bytes)
    }

    pub fn read_json(&mut self, path: &Path) -> Result<Value, CliError> {
        let bytes = self.read_input(path)?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::io(path, format!("invalid JSON: {e}")))
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), contents.as_bytes())?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn finish(self) -> Result<(), CliError> {
        let manifest = json!({
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        write_atomic(&self.dir.join("manifest.json"), text.as_bytes())
    }
}

/// Write to a temporary file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e.to_string()))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e.to_string()))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error.to_string()))?;
    Ok(())
}

/// CSV text from a header and rows of floats in shortest round-trip form.
pub fn float_csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = format!("{header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn to_json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON value serializes") + "\n"
}
