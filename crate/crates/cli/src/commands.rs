use std::fs;
use std::path::{Path, PathBuf};

use menshov_core::analysis::{
    default_cutoffs, smoothing_obstruction, symmetric_convergence, verify_stage, ConvergenceTrace, TraceGrid,
};
use menshov_core::approximator::{fit_in_measure, residual, FitRequest, GridFunction};
use menshov_core::correction::{build_correction, verify_correction, CorrectionRequest, CorrectionStrategy};
use menshov_core::representer::{CorrectionCache, RepresentationState, RunConfig, Schedule, Target, WitnessMode};
use menshov_core::spectrum::{
    estimate_block_probability, BlockProbabilityRequest, BlockWitness, HalfWidthLaw, PerturbedSpectrum, ShiftProfile,
};
use serde_json::{json, Value};

use crate::args::{
    BuildCorrectionArgs, Command, CounterexampleArgs, EstimateProbArgs, FitArgs, GenSpectrumArgs, PlantArgs,
    RepresentArgs, ScanLArgs, SpectrumArgs, VerifyArgs,
};
use crate::error::CliError;
use crate::output::Outputs;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_file(path)?).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `constant:d`, `power:d0,alpha` or `log:d0`.
pub fn parse_law(text: &str) -> Result<HalfWidthLaw, CliError> {
    let bad = || usage(format!("cannot parse law {text:?}; expected constant:d, power:d0,alpha or log:d0"));
    let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
    let numbers: Vec<f64> = rest
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let law = match (kind.trim(), numbers.as_slice()) {
        ("constant", [d]) => HalfWidthLaw::Constant { d: *d },
        ("power", [d0, alpha]) => HalfWidthLaw::Power { d0: *d0, alpha: *alpha },
        ("log", [d0]) => HalfWidthLaw::Logarithmic { d0: *d0 },
        _ => return Err(bad()),
    };
    law.validate()?;
    Ok(law)
}

const PROFILE_NAMES: [&str; 2] = ["default", "paper"];

/// `default`, `paper`, or a JSON file holding a profile.
pub fn parse_profile(text: &str) -> Result<ShiftProfile, CliError> {
    let profile = match text {
        "default" => ShiftProfile::Default,
        "paper" => ShiftProfile::Paper,
        path => parse_json(Path::new(path))?,
    };
    profile.validate()?;
    Ok(profile)
}

fn is_preset(name: &str) -> bool {
    Target::preset(name).is_some()
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    fs::canonicalize(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn absolute_profile(profile: &mut String) -> Result<(), CliError> {
    if !PROFILE_NAMES.contains(&profile.as_str()) {
        *profile = absolute(Path::new(profile))?.to_string_lossy().into_owned();
    }
    Ok(())
}

fn absolute_spectrum(args: &mut SpectrumArgs) -> Result<(), CliError> {
    if let Some(p) = &args.spectrum {
        args.spectrum = Some(absolute(p)?);
    }
    Ok(())
}

/// Makes every input path absolute, failing when one does not exist, so a
/// manifest can be replayed from anywhere.
pub fn resolve_inputs(cmd: &mut Command) -> Result<(), CliError> {
    match cmd {
        Command::GenSpectrum(a) => absolute_spectrum(&mut a.spectrum),
        Command::ScanL(a) => {
            absolute_spectrum(&mut a.spectrum)?;
            absolute_profile(&mut a.profile)
        }
        Command::Plant(a) => {
            absolute_spectrum(&mut a.spectrum)?;
            absolute_profile(&mut a.profile)
        }
        Command::EstimateProb(a) => absolute_profile(&mut a.profile),
        Command::BuildCorrection(_) | Command::Counterexample(_) => Ok(()),
        Command::Fit(a) => {
            if let Some(p) = &a.samples {
                a.samples = Some(absolute(p)?);
            }
            absolute_profile(&mut a.profile)
        }
        Command::Represent(a) => {
            if !is_preset(&a.target) {
                a.target = absolute(Path::new(&a.target))?.to_string_lossy().into_owned();
            }
            absolute_profile(&mut a.profile)
        }
        Command::Verify(a) => {
            a.state = absolute(&a.state)?;
            Ok(())
        }
        Command::Replay(a) => {
            a.manifest = absolute(&a.manifest)?;
            Ok(())
        }
    }
}

fn load_spectrum(args: &SpectrumArgs) -> Result<PerturbedSpectrum, CliError> {
    match &args.spectrum {
        Some(path) => parse_json(path),
        None => Ok(PerturbedSpectrum::new(args.seed, parse_law(&args.law)?)?),
    }
}

fn default_tolerance(k: i64) -> f64 {
    1.0 / (k as f64 * k as f64)
}

fn read_samples(path: &Path) -> Result<GridFunction, CliError> {
    let file = fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    GridFunction::read_csv(file).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn gen_spectrum(a: &GenSpectrumArgs, out: &mut Outputs) -> Result<Value, CliError> {
    if a.n_min > a.n_max {
        return Err(usage(format!("--n-min {} exceeds --n-max {}", a.n_min, a.n_max)));
    }
    let spectrum = load_spectrum(&a.spectrum)?;
    out.seed = Some(spectrum.seed);
    let mut csv = String::from("n,r,half_width,lambda\n");
    let mut rows = Vec::new();
    for n in a.n_min..=a.n_max {
        let r = spectrum.offset(n);
        let d = spectrum.law.half_width(n);
        let lambda = spectrum.lambda(n).value();
        csv.push_str(&format!("{n},{r:e},{d:e},{lambda:e}\n"));
        rows.push(json!({ "n": n, "r": r, "half_width": d, "lambda": lambda }));
    }
    out.write_json("spectrum.json", &spectrum)?;
    out.write_text("offsets.csv", &csv)?;
    Ok(json!({ "spectrum": spectrum, "offsets": rows }))
}

pub fn scan_l(a: &ScanLArgs, out: &mut Outputs) -> Result<Value, CliError> {
    let mut spectrum = load_spectrum(&a.spectrum)?;
    out.seed = Some(spectrum.seed);
    let profile = parse_profile(&a.profile)?;
    let tolerance = a.tolerance.unwrap_or_else(|| default_tolerance(a.k));
    if !(tolerance > 0.0) {
        return Err(usage("--tolerance must be positive"));
    }
    let l = spectrum.scan_l(a.k, a.l_min, a.l_max, &profile, tolerance)?;
    let check = spectrum.check_condition(a.k, l, &profile, tolerance);
    let witness = BlockWitness {
        k: a.k,
        l,
        tolerance,
        profile_name: profile.name().to_string(),
        profile: profile.clone(),
        jitter: check.max_deviation,
        planted: false,
    };
    spectrum.witnesses.push(witness.clone());
    let result = json!({ "witness": witness, "check": check });
    out.write_json("witness.json", &result)?;
    out.write_json("spectrum.json", &spectrum)?;
    Ok(result)
}

pub fn plant(a: &PlantArgs, out: &mut Outputs) -> Result<Value, CliError> {
    let mut spectrum = load_spectrum(&a.spectrum)?;
    out.seed = Some(spectrum.seed);
    let profile = parse_profile(&a.profile)?;
    let witness = spectrum.plant_witness(a.k, a.l, &profile, a.jitter)?;
    let check = spectrum.check_condition(a.k, a.l, &profile, witness.tolerance);
    let result = json!({ "witness": witness, "check": check });
    out.write_json("witness.json", &result)?;
    out.write_json("spectrum.json", &spectrum)?;
    Ok(result)
}

pub fn estimate_prob(a: &EstimateProbArgs, out: &mut Outputs) -> Result<Value, CliError> {
    out.seed = Some(a.seed);
    let req = BlockProbabilityRequest {
        k: a.k,
        l: a.l.unwrap_or(2 * a.k),
        profile: parse_profile(&a.profile)?,
        law: parse_law(&a.law)?,
        tolerance: a.tolerance.unwrap_or_else(|| default_tolerance(a.k)),
        trials: a.trials,
        seed: a.seed,
    };
    let report = estimate_block_probability(&req)?;
    let z = (report.std_error > 0.0).then(|| (report.estimate - report.analytic) / report.std_error);
    let result = json!({
        "p_hat": report.estimate,
        "std_error": report.std_error,
        "analytic": report.analytic,
        "deviation_in_std_errors": z,
        "report": report,
    });
    out.write_json("probability.json", &result)?;
    Ok(result)
}

pub fn build_correction_cmd(a: &BuildCorrectionArgs, out: &mut Outputs) -> Result<Value, CliError> {
    let strategy: CorrectionStrategy = a.strategy.parse().map_err(CliError::Usage)?;
    if a.eps.is_none() && a.sweep_eps.is_none() {
        return Err(usage("give --eps, --sweep-eps, or both"));
    }
    let request = |eps: f64| CorrectionRequest {
        eps,
        delta: a.delta,
        strategy,
        degree_budget: a.degree_budget,
        oversample: a.oversample,
        margin: a.margin,
    };
    let mut result = serde_json::Map::new();
    if let Some(eps) = a.eps {
        let req = request(eps);
        let correction = build_correction(&req)?;
        let oversample = a.verify_oversample.unwrap_or(2 * a.oversample);
        let verification = verify_correction(&correction.poly, eps, a.delta, oversample);
        out.write_json(
            "correction.json",
            &json!({ "request": req, "correction": correction, "verification": verification }),
        )?;
        result.insert("certificate".into(), json!(correction.certificate));
        result.insert("verification".into(), json!(verification));
    }
    if let Some(list) = &a.sweep_eps {
        let mut rows = Vec::new();
        for &eps in list {
            rows.push(build_correction(&request(eps))?.certificate);
        }
        let c_bound = rows.iter().map(|c| c.c_achieved).fold(0.0f64, f64::max);
        let sweep = json!({
            "delta": a.delta,
            "strategy": strategy,
            "degree_budget": a.degree_budget,
            "rows": rows,
            "c_bound": c_bound,
        });
        out.write_json("sweep.json", &sweep)?;
        result.insert("sweep".into(), sweep);
    }
    Ok(Value::Object(result))
}

pub fn fit(a: &FitArgs, out: &mut Outputs) -> Result<Value, CliError> {
    let grid = match &a.samples {
        Some(path) => read_samples(path)?,
        None => {
            let name = a.target.as_deref().unwrap_or("step");
            let target = Target::preset(name).ok_or_else(|| usage(format!("unknown target preset {name:?}")))?;
            let step = a.step.unwrap_or_else(|| GridFunction::dyadic_step_for(a.max_degree));
            target.sample(a.half_length, step)?
        }
    };
    let req = FitRequest {
        threshold: a.threshold,
        measure_budget: a.budget,
        profile: parse_profile(&a.profile)?,
        max_degree: a.max_degree,
        refine: a.refine,
    };
    let fit = fit_in_measure(&grid, &req)?;
    out.write_json("fit.json", &fit)?;
    out.write_text("residual.csv", &residual(&grid, &fit.poly).to_csv_string())?;
    Ok(json!({ "report": fit.report, "poly": fit.poly }))
}

fn run_config(a: &RepresentArgs) -> Result<RunConfig, CliError> {
    let schedule = Schedule::by_name(&a.schedule).ok_or_else(|| usage(format!("unknown schedule {:?}", a.schedule)))?;
    let mut config = if schedule.name == "paper" { RunConfig::paper() } else { RunConfig::desk() };
    let default_jitter = match config.witness {
        WitnessMode::Plant { jitter } => jitter,
        WitnessMode::Scan { .. } => 0.0,
    };
    config.witness = match a.witness.as_str() {
        "plant" => WitnessMode::Plant {
            jitter: a.jitter.unwrap_or(default_jitter),
        },
        "scan" => WitnessMode::Scan { span: a.scan_span },
        other => return Err(usage(format!("unknown witness mode {other:?}; expected plant or scan"))),
    };
    if let Some(s) = &a.strategy {
        config.strategy = s.parse().map_err(CliError::Usage)?;
    }
    if let Some(v) = a.degree_budget {
        config.degree_budget = v;
    }
    if let Some(v) = a.oversample {
        config.oversample = v;
    }
    if let Some(v) = a.window {
        config.window_pi = v;
    }
    if let Some(v) = a.threshold {
        config.residual_threshold = v;
    }
    if let Some(v) = a.refine {
        config.refine_fits = v;
    }
    if a.horizon.is_some() {
        config.horizon_pi = a.horizon;
    }
    Ok(config)
}

fn window_residual(state: &RepresentationState, n: u32, window_pi: f64, step_pi: f64) -> Result<GridFunction, CliError> {
    let target = state.target.sample(window_pi, step_pi)?;
    let s = state.evaluate_s(n, window_pi, step_pi)?;
    Ok(target.difference(&s)?)
}

pub fn represent(a: &RepresentArgs, out: &mut Outputs) -> Result<Value, CliError> {
    let config = run_config(a)?;
    let target = if is_preset(&a.target) {
        Target::preset(&a.target).expect("checked")
    } else {
        Target::Samples {
            grid: read_samples(Path::new(&a.target))?,
        }
    };
    let mut state = RepresentationState::new(a.seed, parse_law(&a.law)?, parse_profile(&a.profile)?, target)?;
    out.seed = Some(a.seed);
    out.schedule = Some(json!(config.schedule));
    out.write_json("config.json", &config)?;

    let mut cache = CorrectionCache::default();
    let mut failure = None;
    let mut summary = Vec::new();
    for _ in 0..a.stages {
        let record = match state.run_stage(&config, &mut cache) {
            Ok(record) => record.clone(),
            Err(e) => {
                failure = Some(e);
                break;
            }
        };
        let n = record.n;
        out.write_json(&format!("stage-{n}.json"), &record)?;
        let r = window_residual(&state, n, config.window_pi, record.tolerances.step_pi)?;
        out.write_text(&format!("residual-{n}.csv"), &r.to_csv_string())?;
        summary.push(json!({
            "n": n,
            "fit": record.fit,
            "f_degree": record.f.degree(),
            "block": record.block.as_ref().map(|b| json!({
                "k": b.k,
                "l": b.witness.l,
                "delta": b.parameters.delta,
                "eps": b.parameters.eps,
                "q_degree": b.q.poly.degree(),
                "q_certificate": b.q.certificate,
                "a_terms": b.a.len(),
                "checks": b.checks,
            })),
            "window": record.window,
        }));
    }
    let mut coefficients = state.export_coefficients();
    coefficients.push('\n');
    out.write_text("coefficients.json", &coefficients)?;
    let mut state_text = state.to_json();
    state_text.push('\n');
    out.write_text("state.json", &state_text)?;
    let result = json!({
        "requested": a.stages,
        "completed": state.completed(),
        "stages": summary,
    });
    out.write_json("summary.json", &result)?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(result),
    }
}

pub fn verify(a: &VerifyArgs, out: &mut Outputs) -> Result<Value, CliError> {
    let path = if a.state.is_dir() { a.state.join("state.json") } else { a.state.clone() };
    let state = RepresentationState::from_json(&read_file(&path)?).map_err(|e| CliError::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    out.seed = Some(state.spectrum.seed);
    let grid = TraceGrid::from_state(&state).ok_or_else(|| usage("the state has no completed stages"))?;
    let trace = ConvergenceTrace::compute(&state, &grid, a.per_block)?;
    let xs = state.target.sample(grid.window_pi, grid.step_pi)?.points();
    let symmetric = symmetric_convergence(&state, &default_cutoffs(&state, a.per_block), &xs)?;
    let mut stages = Vec::new();
    for stage in &state.stages {
        let Some(v) = verify_stage(&state, stage)? else {
            stages.push(json!({ "n": stage.n, "empty": true }));
            continue;
        };
        stages.push(json!({
            "n": stage.n,
            "empty": false,
            "spec_inside_block": v.spec_inside_block(),
            "norm_within_bound": v.norm_within_bound(),
            "transplant_within_bound": v.transplant_within_bound(),
            "detail": v,
        }));
    }
    out.write_text("convergence.csv", &trace.to_csv_string())?;
    let result = json!({
        "trace": trace,
        "measure_increases": trace.measure_increases(),
        "majorant_increases": trace.majorant_increases(),
        "symmetric": symmetric,
        "stages": stages,
    });
    out.write_json("verification.json", &result)?;
    Ok(result)
}

pub fn counterexample(a: &CounterexampleArgs, out: &mut Outputs) -> Result<Value, CliError> {
    let report = smoothing_obstruction(a.alpha, a.beta, a.c, a.k_max)?;
    out.write_json("obstruction.json", &report)?;
    Ok(json!(report))
}
