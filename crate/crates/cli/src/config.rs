//! Flat `key = value` configuration files, spliced into the argument list.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Path given by `--config` or `--config=...`, if any.
pub fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

/// `(key, value)` pairs; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str, path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: expected key = value", i + 1),
            });
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: bad key", i + 1),
            });
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn has_flag(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefixed = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefixed)
    })
}

/// Appends `--key value` for every config entry whose flag is absent.
/// `true` becomes a bare switch and `false` is dropped.
pub fn splice(args: Vec<OsString>, entries: &[(String, String)]) -> Vec<OsString> {
    let mut out = args.clone();
    for (key, value) in entries {
        if has_flag(&args, key) {
            continue;
        }
        match value.as_str() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={value}").into()),
        }
    }
    out
}

/// Reads the config named on the command line, if any, and splices it in.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
    let entries = parse_config(&text, &path)?;
    Ok(splice(args, &entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn command_line_flags_win() {
        let entries = parse_config("# run\nseed = 3\nk=2\n\nstdout = true\nrefine=false\n", Path::new("c")).unwrap();
        let out = splice(os(&["menshov", "estimate-prob", "--seed", "9"]), &entries);
        assert_eq!(out, os(&["menshov", "estimate-prob", "--seed", "9", "--k=2", "--stdout"]));
    }

    #[test]
    fn finds_both_spellings() {
        assert_eq!(config_path(&os(&["m", "--config", "a.cfg"])), Some(PathBuf::from("a.cfg")));
        assert_eq!(config_path(&os(&["m", "--config=b.cfg"])), Some(PathBuf::from("b.cfg")));
        assert_eq!(config_path(&os(&["m", "fit"])), None);
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse_config("seed 3", Path::new("c")).is_err());
        assert!(parse_config("config = x", Path::new("c")).is_err());
    }

    #[test]
    fn underscores_become_dashes() {
        let e = parse_config("degree_budget = 10", Path::new("c")).unwrap();
        assert_eq!(e, vec![("degree-budget".to_string(), "10".to_string())]);
    }
}
