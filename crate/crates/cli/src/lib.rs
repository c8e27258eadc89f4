//! Command line front end: each subcommand writes its outputs and a
//! `manifest.json` into one directory, and `replay` re-runs a manifest.

pub mod args;
mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

pub use args::{Cli, Command};
pub use commands::{parse_law, parse_profile};
pub use error::{CliError, EXIT_ALGORITHMIC, EXIT_OK, EXIT_USAGE};
pub use output::{Outputs, RunManifest, MANIFEST_FILE};

fn execute(cmd: &Command, out: &mut Outputs) -> Result<Value, CliError> {
    match cmd {
        Command::GenSpectrum(a) => commands::gen_spectrum(a, out),
        Command::ScanL(a) => commands::scan_l(a, out),
        Command::Plant(a) => commands::plant(a, out),
        Command::EstimateProb(a) => commands::estimate_prob(a, out),
        Command::BuildCorrection(a) => commands::build_correction_cmd(a, out),
        Command::Fit(a) => commands::fit(a, out),
        Command::Represent(a) => commands::represent(a, out),
        Command::Verify(a) => commands::verify(a, out),
        Command::Counterexample(a) => commands::counterexample(a, out),
        Command::Replay(_) => Err(CliError::Usage("a manifest cannot record a replay".into())),
    }
}

/// Runs `cmd` into `dir`, writing `failure.json` on error and the manifest
/// in every case.
pub fn run_command(cmd: &Command, dir: &std::path::Path) -> Result<Value, CliError> {
    let start = Instant::now();
    let mut out = Outputs::create(dir)?;
    let result = execute(cmd, &mut out);
    let code = match &result {
        Ok(_) => EXIT_OK,
        Err(e) => {
            out.write_json("failure.json", &e.to_json())?;
            e.exit_code()
        }
    };
    out.finish(cmd, code, start.elapsed().as_secs_f64())?;
    result
}

fn report(e: &CliError) -> i32 {
    eprintln!("{}", serde_json::to_string(&e.to_json()).expect("error serialises"));
    e.exit_code()
}

fn dispatch(cli: Cli) -> Result<Value, CliError> {
    let global = cli.global;
    if let Some(n) = global.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let (mut cmd, default_dir): (Command, PathBuf) = match cli.command {
        Command::Replay(r) => {
            let manifest = RunManifest::read(&r.manifest)?;
            let dir = global.out_root.join(format!("{}-replay", manifest.command));
            (manifest.parameters, dir)
        }
        cmd => {
            let dir = global.out_root.join(cmd.name());
            (cmd, dir)
        }
    };
    commands::resolve_inputs(&mut cmd)?;
    let dir = global.out.unwrap_or(default_dir);
    let value = run_command(&cmd, &dir)?;
    if global.stdout {
        let text = serde_json::to_string_pretty(&value).expect("result serialises");
        // A reader that stops early (`| head`) is not an error.
        if let Err(e) = writeln!(std::io::stdout().lock(), "{text}") {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                return Err(CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                });
            }
        }
    }
    Ok(value)
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::expand_args(args) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let err = json!({ "error": "usage", "message": e.to_string(), "exit_code": EXIT_USAGE });
            eprintln!("{}", serde_json::to_string(&err).expect("error serialises"));
            return EXIT_USAGE;
        }
    };
    match dispatch(cli) {
        Ok(_) => EXIT_OK,
        Err(e) => report(&e),
    }
}
