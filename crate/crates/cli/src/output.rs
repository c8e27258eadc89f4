use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command and check its outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Resolved parameters, input paths made absolute.
    pub parameters: Command,
    pub seed: Option<u64>,
    /// Stage schedule of a `represent` run, in full.
    pub schedule: Option<serde_json::Value>,
    pub versions: BTreeMap<String, String>,
    /// Files written next to the manifest, in order.
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path,
            message: e.to_string(),
        })
    }
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("menshov-core".to_string(), menshov_core::VERSION.to_string()),
        ("menshov-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ])
}

/// Output directory plus the record of what went into it.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    pub seed: Option<u64>,
    pub schedule: Option<serde_json::Value>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            seed: None,
            schedule: None,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialise");
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn finish(&mut self, parameters: &Command, exit_code: i32, wall_clock_seconds: f64) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: parameters.name().to_string(),
            parameters: parameters.clone(),
            seed: self.seed,
            schedule: self.schedule.clone(),
            versions: versions(),
            outputs: self.files.clone(),
            exit_code,
            wall_clock_seconds,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}
