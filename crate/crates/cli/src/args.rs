use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "menshov", version, about = "Sparse exponential-sum representations on randomly perturbed integers")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args)]
pub struct GlobalArgs {
    /// Output directory. Defaults to `<out-root>/<command>`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Root for default output directories.
    #[arg(long, global = true, env = "MENSHOV_OUT_DIR", default_value = "menshov-out")]
    pub out_root: PathBuf,
    /// Also print the main JSON result on stdout.
    #[arg(long, global = true)]
    pub stdout: bool,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat `key = value` file. Each key is a long flag; flags given on the
    /// command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Sample a spectrum realisation and tabulate offsets.
    GenSpectrum(GenSpectrumArgs),
    /// Search for a block that satisfies the condition without planting.
    ScanL(ScanLArgs),
    /// Force the block condition at a given (k, l).
    Plant(PlantArgs),
    /// Monte Carlo probability that a fresh block satisfies the condition.
    EstimateProb(EstimateProbArgs),
    /// Build and certify a correction polynomial.
    BuildCorrection(BuildCorrectionArgs),
    /// Least-squares fit in measure by the shifted exponential system.
    Fit(FitArgs),
    /// Run the stage construction.
    Represent(RepresentArgs),
    /// Recheck a finished run and write its convergence trace.
    Verify(VerifyArgs),
    /// Smoothing obstruction for spectra close to the integers.
    Counterexample(CounterexampleArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenSpectrum(_) => "gen-spectrum",
            Command::ScanL(_) => "scan-l",
            Command::Plant(_) => "plant",
            Command::EstimateProb(_) => "estimate-prob",
            Command::BuildCorrection(_) => "build-correction",
            Command::Fit(_) => "fit",
            Command::Represent(_) => "represent",
            Command::Verify(_) => "verify",
            Command::Counterexample(_) => "counterexample",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `constant:d`, `power:d0,alpha` or `log:d0`.
    #[arg(long, default_value = "constant:0.5")]
    pub law: String,
    /// Start from a saved spectrum instead of a fresh one.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GenSpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spectrum: SpectrumArgs,
    #[arg(long, default_value_t = -16, allow_hyphen_values = true)]
    pub n_min: i64,
    #[arg(long, default_value_t = 16, allow_hyphen_values = true)]
    pub n_max: i64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ScanLArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spectrum: SpectrumArgs,
    #[arg(long)]
    pub k: i64,
    #[arg(long)]
    pub l_min: i64,
    #[arg(long)]
    pub l_max: i64,
    /// `default`, `paper` or a JSON profile file.
    #[arg(long, default_value = "default")]
    pub profile: String,
    /// Defaults to `1/k^2`.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct PlantArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub spectrum: SpectrumArgs,
    #[arg(long)]
    pub k: i64,
    #[arg(long)]
    pub l: i64,
    #[arg(long, default_value = "default")]
    pub profile: String,
    #[arg(long, default_value_t = 1e-9)]
    pub jitter: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct EstimateProbArgs {
    #[arg(long)]
    pub k: i64,
    /// Block position; defaults to `2k`.
    #[arg(long)]
    pub l: Option<i64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "default")]
    pub profile: String,
    #[arg(long, default_value = "constant:0.5")]
    pub law: String,
    /// Defaults to `1/k^2`.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct BuildCorrectionArgs {
    /// Required unless `--sweep-eps` is given.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub delta: f64,
    /// `analytic` or `minimax`.
    #[arg(long, default_value = "minimax")]
    pub strategy: String,
    #[arg(long, default_value_t = 64)]
    pub degree_budget: u64,
    #[arg(long, default_value_t = 8)]
    pub oversample: usize,
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    /// Oversampling of the independent re-verification; defaults to twice
    /// `--oversample`.
    #[arg(long)]
    pub verify_oversample: Option<usize>,
    /// Build one polynomial per listed eps at the same delta and record the
    /// largest `C_achieved`.
    #[arg(long, value_delimiter = ',')]
    pub sweep_eps: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// CSV with columns `x, re, im`.
    #[arg(long, conflicts_with = "target")]
    pub samples: Option<PathBuf>,
    /// Preset target: zero, step, sawtooth, single-exponential.
    #[arg(long)]
    pub target: Option<String>,
    /// Half length of the fitting interval in units of pi (presets only).
    #[arg(long, default_value_t = 1.0)]
    pub half_length: f64,
    /// Grid step in units of pi (presets only); defaults to the dyadic step
    /// resolving `--max-degree`.
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub budget: f64,
    #[arg(long, default_value_t = 32)]
    pub max_degree: u64,
    #[arg(long, default_value = "default")]
    pub profile: String,
    /// Keep climbing the degree ladder after the budget is met.
    #[arg(long)]
    pub refine: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct RepresentArgs {
    /// Preset name or a samples CSV.
    #[arg(long, default_value = "step")]
    pub target: String,
    #[arg(long, default_value_t = 4)]
    pub stages: u32,
    /// `desk` or `paper`.
    #[arg(long, default_value = "desk")]
    pub schedule: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "constant:0.5")]
    pub law: String,
    #[arg(long, default_value = "default")]
    pub profile: String,
    /// `plant` or `scan`.
    #[arg(long, default_value = "plant")]
    pub witness: String,
    /// Planted offset jitter; the schedule's default when absent.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Width of the `l` range searched in scan mode.
    #[arg(long, default_value_t = 1_000_000)]
    pub scan_span: i64,
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub degree_budget: Option<u64>,
    #[arg(long)]
    pub oversample: Option<usize>,
    /// Half length in units of pi of the convergence window.
    #[arg(long)]
    pub window: Option<f64>,
    /// Level of the convergence-in-measure diagnostic.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Whether each fit keeps climbing the degree ladder.
    #[arg(long)]
    pub refine: Option<bool>,
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Output directory of a `represent` run, or its `state.json`.
    #[arg(long)]
    pub state: PathBuf,
    /// Symmetric cutoffs placed inside each block.
    #[arg(long, default_value_t = 8)]
    pub per_block: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 6)]
    pub k_max: u32,
    /// Offsets are at most `c n^-alpha`.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// A `manifest.json` or the directory holding it.
    #[arg(long)]
    pub manifest: PathBuf,
}
