//! The `riccilab` binary end to end: exit codes, run directories, compare.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn riccilab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccilab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn flat_config(name: &str, kappa: f64) -> String {
    format!(
        r#"name = "{name}"
checks = ["universal-bound", "weak-bound"]

[grid]
dim = 2
points_per_axis = 16

[generator]
family = "flat"
amplitude = 0.0

[stepper]
T = 0.1
cfl_safety = 0.5

[evaluator]
points = [[1.0, 2.0], [3.0, 0.5]]
kappa = {kappa:?}
"#
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(tmp: &TempDir, config: &Path) -> Output {
    riccilab(&["run", config.to_str().unwrap(), "--out", tmp.path().join("runs").to_str().unwrap()])
}

#[test]
fn flat_run_passes_and_writes_its_directory() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "flat.toml", &flat_config("flat", 0.0));
    let o = run(&tmp, &cfg);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = tmp.path().join("runs/flat");
    for f in ["config.toml", "series.csv", "provenance.json", "checks.json", "estimates.csv", "snapshot_0e0.gfb"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let checks: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("checks.json")).unwrap()).unwrap();
    assert_eq!(checks["pass"], true);
}

#[test]
fn violated_bound_exits_4_naming_the_check() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "flat.toml", &flat_config("too-high", 1.0));
    let o = run(&tmp, &cfg);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("too-high:weak-bound"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2_before_any_compute() {
    let tmp = TempDir::new().unwrap();
    let unknown_key = flat_config("x", 0.0).replace("[grid]", "colour = 3\n[grid]");
    let bad_beta = flat_config("x", 0.0).replace("[evaluator]", "[evaluator]\nbeta = 0.5");
    let odd_grid = flat_config("x", 0.0).replace("points_per_axis = 16", "points_per_axis = 15");
    let bad_check = flat_config("x", 0.0).replace("\"weak-bound\"]", "\"no-such-check\"]");
    for (i, text) in [unknown_key, bad_beta, odd_grid, bad_check].iter().enumerate() {
        let cfg = write(tmp.path(), &format!("bad{i}.toml"), text);
        let o = run(&tmp, &cfg);
        assert_eq!(code(&o), 2, "case {i}: {}", stderr(&o));
        assert!(!tmp.path().join("runs/x/series.csv").exists());
    }
    let o = riccilab(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unwritable_output_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "flat.toml", &flat_config("flat", 0.0));
    let blocker = write(tmp.path(), "blocker", "");
    let o = riccilab(&["run", cfg.to_str().unwrap(), "--out", blocker.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn unknown_suite_exits_2() {
    let o = riccilab(&["suite", "no-such-suite"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("curvature-oracle"));
}

#[test]
fn suite_writes_its_summary() {
    let tmp = TempDir::new().unwrap();
    let o = riccilab(&["suite", "curvature-oracle", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("suite_curvature-oracle.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["suites"][0]["criterion"], 1);
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "flat.toml", &flat_config("flat", 0.0));
    assert_eq!(code(&run(&tmp, &cfg)), 0);
    let echo = tmp.path().join("runs/flat/config.toml");
    let again = TempDir::new().unwrap();
    assert_eq!(code(&run(&again, &echo)), 0);
    let a = std::fs::read_to_string(&echo).unwrap();
    let b = std::fs::read_to_string(again.path().join("runs/flat/config.toml")).unwrap();
    assert_eq!(a, b);
    let sa = std::fs::read_to_string(tmp.path().join("runs/flat/series.csv")).unwrap();
    let sb = std::fs::read_to_string(again.path().join("runs/flat/series.csv")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn identical_runs_compare_to_zero_and_refuse_a_slope() {
    let tmp = TempDir::new().unwrap();
    let conformal = flat_config("conformal", -0.2)
        .replace("\"flat\"", "\"conformal\"")
        .replace("amplitude = 0.0", "amplitude = 0.05");
    let cfg = write(tmp.path(), "c.toml", &conformal);
    assert_eq!(code(&run(&tmp, &cfg)), 0);
    let dir = tmp.path().join("runs/conformal");
    let d = dir.to_str().unwrap();

    let o = riccilab(&["compare", d, d, "--mode", "trajectory-diff"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let gaps: Vec<f64> = text
        .lines()
        .skip(2)
        .filter_map(|l| l.split_whitespace().nth(1)?.parse().ok())
        .collect();
    assert!(!gaps.is_empty() && gaps.iter().all(|g| *g == 0.0), "{text}");

    let o = riccilab(&["compare", d, d, "--mode", "scalar-decay"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("degenerate"));

    let o = riccilab(&["compare", d, d, "--mode", "sideways"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn generate_writes_members_and_provenance() {
    let tmp = TempDir::new().unwrap();
    let text = r#"name = "pair"
checks = ["universal-bound"]

[grid]
dim = 2
points_per_axis = 32

[generator]
family = "second-order-pair"
amplitude = 0.05
pair_scale = 0.25

[stepper]
T = 0.01
"#;
    let cfg = write(tmp.path(), "pair.toml", text);
    let o = riccilab(&["generate", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let dir = tmp.path().join("pair");
    let gfbs: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "gfb"))
        .collect();
    assert_eq!(gfbs.len(), 2);
    let prov: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("provenance.json")).unwrap()).unwrap();
    assert_eq!(prov["family"], "second-order-pair");
    assert!(prov["min_eigenvalue"].as_f64().unwrap() >= 0.5);
}

#[test]
fn amplitude_above_the_run_gate_exits_2() {
    let tmp = TempDir::new().unwrap();
    let big = flat_config("big", 0.0)
        .replace("\"flat\"", "\"random-smooth\"")
        .replace("amplitude = 0.0", "amplitude = 0.3");
    let cfg = write(tmp.path(), "big.toml", &big);
    assert_eq!(code(&run(&tmp, &cfg)), 2);
}
