use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-heff"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const LAMBDA: &str = r#"
methods = ["markov", "james2"]

[system]
n = 2
detunings = [100.0, 100.0]
eta = 1.0
fock_cutoff = 3
cavity_leg = "emission"

[[system.drives]]
kind = "constant"
amplitude = 1.0

[output]
directory = "unused"
formats = ["text", "json"]
"#;

#[test]
fn validate_presets() {
    for name in [
        "lambda_2photon",
        "fourlevel_3photon",
        "lambda_scaling_sweep",
    ] {
        let out = run(&["validate", "--preset", name]);
        assert_eq!(
            code(&out),
            0,
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(stdout(&out).starts_with("ok:"));
    }
}

#[test]
fn heff_writes_markov_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "lambda.toml", LAMBDA);
    let out_dir = tmp.path().join("out");
    let out = run(&["heff", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(out_dir.join("heff_markov.txt")).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("a†σ_{2,g} + h.c."))
        .expect("coupling line");
    let fields: Vec<&str> = line.split('\t').collect();
    assert!(fields[1].starts_with("-2.000000000000e-2"), "{line}");
    assert_eq!(fields[3], "markov");
    assert!(out_dir.join("heff_james2.json").exists());
    assert!(!out_dir.join("heff_markov.csv").exists());
}

#[test]
fn heff_json_on_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "heff",
        "--preset",
        "lambda_2photon",
        "--method",
        "markov",
        "--json",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["method"], "markov");
}

#[test]
fn off_resonant_gjames_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
methods = ["markov", "gjames3"]

[system]
n = 3
detunings = [50.0, 100.0, -140.0]
eta = 1.0
fock_cutoff = 2

[[system.drives]]
kind = "constant"
amplitude = 1.0

[[system.drives]]
kind = "constant"
amplitude = 1.0

[output]
directory = "unused"
formats = ["text"]
"#;
    let cfg = write_config(tmp.path(), "off.toml", body);
    let out = run(&[
        "heff",
        "--config",
        &cfg,
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    // The Markov report is still written.
    assert!(tmp.path().join("heff_markov.txt").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("inapplicable"));
}

#[test]
fn invalid_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = LAMBDA.replace("detunings = [100.0, 100.0]", "detunings = [100.0, 0.0]");
    let cfg = write_config(tmp.path(), "bad.toml", &bad);
    assert_eq!(code(&run(&["validate", "--config", &cfg])), 2);
    assert_eq!(code(&run(&["heff", "--config", &cfg])), 2);

    let cfg = write_config(tmp.path(), "garbage.toml", "methods = 3");
    assert_eq!(code(&run(&["validate", "--config", &cfg])), 2);
}

#[test]
fn unstable_dt_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--preset",
        "lambda_2photon",
        "--dt",
        "0.01",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_source_is_usage_error() {
    assert_eq!(code(&run(&["heff"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn simulate_writes_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--preset",
        "lambda_2photon",
        "--method",
        "james2",
        "--t-final",
        "50",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let full = std::fs::read_to_string(tmp.path().join("trajectory_full.csv")).unwrap();
    assert!(full.starts_with("t,P_g,P_1,P_2,"));
    assert!(tmp.path().join("trajectory_james2.csv").exists());
    assert!(tmp.path().join("comparison.json").exists());
    assert!(stdout(&out).contains("james2"));
}

#[test]
fn sweep_rows_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep",
        "--preset",
        "lambda_scaling_sweep",
        "--quiet",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(tmp.path().join("sweep_summary.csv")).unwrap();
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values, vec![25.0, 50.0, 100.0, 200.0]);
}

#[test]
fn sweep_subcommand_rejects_experiment_config() {
    assert_eq!(code(&run(&["sweep", "--preset", "lambda_2photon"])), 2);
}
