//! Helpers for the acceptance suite: run CLI commands in-process and compare
//! output directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::Value;

/// One finished command and where it wrote.
#[derive(Debug)]
pub struct Run {
    pub dir: PathBuf,
    pub code: i32,
    pub seconds: f64,
}

impl Run {
    pub fn json(&self, name: &str) -> Value {
        let path = self.dir.join(name);
        let text = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
    }

    /// The structured error of a failed run, as written to `failure.json`.
    pub fn failure(&self) -> Value {
        if self.dir.join("failure.json").exists() {
            self.json("failure.json")
        } else {
            Value::Null
        }
    }
}

/// Runs `menshov <args> --out <root>/<name>`.
pub fn run_cli(root: &Path, name: &str, args: &[&str]) -> Run {
    let dir = root.join(name);
    let start = Instant::now();
    let mut argv = vec!["menshov".to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    argv.push("--out".into());
    argv.push(dir.to_string_lossy().into_owned());
    let code = menshov_cli::run(argv);
    Run {
        dir,
        code,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Checks that `replay` matches `original`: same exit code, same recorded
/// parameters and output list, and byte-identical output files. Returns the
/// number of files compared.
pub fn compare_outputs(original: &Run, replay: &Run) -> Result<usize, String> {
    if replay.code != original.code {
        return Err(format!("{}: exit {} vs {}", original.dir.display(), replay.code, original.code));
    }
    let a = original.json(menshov_cli::MANIFEST_FILE);
    let b = replay.json(menshov_cli::MANIFEST_FILE);
    if a["parameters"] != b["parameters"] || a["outputs"] != b["outputs"] {
        return Err(format!("{}: manifests disagree", original.dir.display()));
    }
    let files = a["outputs"].as_array().cloned().unwrap_or_default();
    for f in &files {
        let f = f.as_str().unwrap_or_default();
        if fs::read(original.dir.join(f)).ok() != fs::read(replay.dir.join(f)).ok() {
            return Err(format!("{} differs", original.dir.join(f).display()));
        }
    }
    Ok(files.len())
}
