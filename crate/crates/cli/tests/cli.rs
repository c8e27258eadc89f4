use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn menshov(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_menshov"))
        .current_dir(dir)
        .env_remove("MENSHOV_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

#[test]
fn estimate_prob_writes_report_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = menshov(tmp.path(), &["estimate-prob", "--k", "2", "--trials", "20000", "--seed", "7", "--out", "p", "--stdout"]);
    assert_eq!(out.status.code(), Some(0));
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    let written = json(&tmp.path().join("p/probability.json"));
    assert_eq!(printed, written);
    assert_eq!(written["analytic"], 1.0 / 64.0);
    let manifest = json(&tmp.path().join("p/manifest.json"));
    assert_eq!(manifest["command"], "estimate-prob");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["outputs"], serde_json::json!(["probability.json"]));
    assert_eq!(manifest["exit_code"], 0);
}

#[test]
fn default_output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_menshov"))
        .current_dir(tmp.path())
        .env("MENSHOV_OUT_DIR", "runs")
        .args(["counterexample", "--alpha", "1", "--beta", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = json(&tmp.path().join("runs/counterexample/obstruction.json"));
    assert_eq!(report["minimal_k"], 2);
}

#[test]
fn represent_zero_exports_no_coefficients() {
    let tmp = tempfile::tempdir().unwrap();
    let out = menshov(tmp.path(), &["represent", "--target", "zero", "--stages", "3", "--out", "z"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(tmp.path().join("z/coefficients.json")).unwrap().trim(), "[]");
    for n in 1..=3 {
        assert!(tmp.path().join(format!("z/stage-{n}.json")).exists());
        assert!(tmp.path().join(format!("z/residual-{n}.csv")).exists());
    }
}

#[test]
fn verify_writes_one_trace_row_per_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = menshov(
        tmp.path(),
        &["represent", "--target", "step", "--stages", "1", "--refine", "false", "--out", "run"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = menshov(tmp.path(), &["verify", "--state", "run", "--per-block", "2", "--out", "v"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("v/convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("n,bad_measure_rn"));
    let v = json(&tmp.path().join("v/verification.json"));
    for s in v["stages"].as_array().unwrap() {
        if s["empty"] == false {
            assert_eq!(s["spec_inside_block"], true);
            assert_eq!(s["norm_within_bound"], true);
            assert_eq!(s["transplant_within_bound"], true);
        }
    }
}

#[test]
fn algorithmic_failure_exits_two_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = menshov(
        tmp.path(),
        &["build-correction", "--eps", "0.5", "--delta", "0.2", "--strategy", "minimax", "--degree-budget", "8", "--out", "c"],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "correction");
    assert_eq!(err["details"]["required_degree"], 93);
    assert_eq!(json(&tmp.path().join("c/failure.json")), err);
    assert_eq!(json(&tmp.path().join("c/manifest.json"))["exit_code"], 2);
}

#[test]
fn missing_witness_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    // Under the `paper` profile sigma(0) = 2 lies outside every offset's support.
    let out = menshov(
        tmp.path(),
        &["scan-l", "--k", "2", "--l-min", "4", "--l-max", "200", "--profile", "paper", "--out", "s"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "witness");
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["no-such-command"],
        vec!["estimate-prob"],
        vec!["estimate-prob", "--k", "2", "--law", "uniform"],
        vec!["verify", "--state", "does-not-exist"],
        vec!["build-correction", "--strategy", "minimax"],
    ] {
        let out = menshov(tmp.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert_eq!(stderr_json(&out)["exit_code"], 1, "{args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = menshov(tmp.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("represent"));
}

#[test]
fn config_file_supplies_missing_flags() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.cfg"), "# probability run\nk = 2\ntrials = 1000\nseed = 3\nout = cfg\n").unwrap();
    let out = menshov(tmp.path(), &["estimate-prob", "--config", "run.cfg", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&tmp.path().join("cfg/probability.json"));
    assert_eq!(report["report"]["request"]["trials"], 1000);
    assert_eq!(report["report"]["request"]["seed"], 5);
}

#[test]
fn plant_then_gen_spectrum_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = menshov(tmp.path(), &["plant", "--k", "3", "--l", "10", "--seed", "4", "--jitter", "0.01", "--out", "p"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let w = json(&tmp.path().join("p/witness.json"));
    assert_eq!(w["check"]["holds"], true);
    let out = menshov(
        tmp.path(),
        &["gen-spectrum", "--spectrum", "p/spectrum.json", "--n-min", "7", "--n-max", "13", "--out", "g"],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("g/offsets.csv")).unwrap();
    // n = 10 is the centre of the block, so r(10) sits within the jitter of sigma(0) = 1/4.
    let row = csv.lines().find(|l| l.starts_with("10,")).unwrap();
    let r: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((r - 0.25).abs() < 0.01);
    // The manifest records the input by absolute path.
    let manifest = json(&tmp.path().join("g/manifest.json"));
    assert!(Path::new(manifest["parameters"]["spectrum"].as_str().unwrap()).is_absolute());
}

#[test]
fn replay_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = menshov(tmp.path(), &["fit", "--target", "sawtooth", "--budget", "0.3", "--out", "a"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = menshov(tmp.path(), &["replay", "--manifest", "a", "--out", "b"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["fit.json", "residual.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    assert_eq!(json(&tmp.path().join("b/manifest.json"))["command"], "fit");
}
