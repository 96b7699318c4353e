//! Output files and the run manifest that closes every command.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct Versions {
    hamforge: &'static str,
    hamforge_cli: &'static str,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    schema_version: u32,
    command: &'a str,
    status: &'a str,
    exit_code: u8,
    error: Option<String>,
    seed: Option<u64>,
    config: Value,
    versions: Versions,
    outputs: Vec<String>,
}

/// Files written by one command, in order.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: impl Into<PathBuf>) -> CliResult<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        Ok(Outputs { dir, written: Vec::new() })
    }

    /// Writes `contents` to `rel` under the output directory.
    pub fn write(&mut self, rel: impl AsRef<Path>, contents: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        std::fs::write(&path, contents).map_err(CliError::io(&path))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json(&mut self, rel: impl AsRef<Path>, value: &impl Serialize) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
        text.push('\n');
        self.write(rel, &text)
    }

    /// Writes the manifest last, recording `result`.
    pub fn finish(self, command: &str, seed: Option<u64>, config: &impl Serialize, result: &CliResult<()>) -> CliResult<()> {
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            command,
            status: if result.is_ok() { "ok" } else { "failed" },
            exit_code: result.as_ref().err().map_or(0, CliError::exit_code),
            error: result.as_ref().err().map(ToString::to_string),
            seed,
            config: serde_json::to_value(config).map_err(|e| CliError::Input(e.to_string()))?,
            versions: Versions {
                hamforge: hamforge::VERSION,
                hamforge_cli: env!("CARGO_PKG_VERSION"),
            },
            outputs: self.written.iter().map(|p| p.display().to_string()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Input(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_NAME);
        std::fs::write(&path, text).map_err(CliError::io(&path))
    }
}

/// Runs `body` and always closes with a manifest.
pub fn run_with_manifest<C: Serialize>(
    command: &str,
    dir: &Path,
    seed: Option<u64>,
    config: &C,
    body: impl FnOnce(&mut Outputs) -> CliResult<()>,
) -> CliResult<()> {
    let mut out = Outputs::create(dir)?;
    let result = body(&mut out);
    out.finish(command, seed, config, &result)?;
    result
}
