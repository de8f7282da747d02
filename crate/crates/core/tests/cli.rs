use std::path::Path;
use std::process::{Command, Output};

use pinocchio_lab::cli::config::ExperimentConfig;
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinocchio"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("PINOCCHIO_JOBS")
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["sweep", "--n", "3", "--r", "0.1,0.5", "--L", "1,10", "--N", "32"];
    assert!(run(&args, &a).status.success());
    assert!(run(&args, &b).status.success());
    assert_eq!(read(a.join("sweep.csv")), read(b.join("sweep.csv")));
    let strip_out = |p: &Path| {
        let mut v: Value = serde_json::from_str(&read(p)).unwrap();
        v["config"]["out"] = Value::Null;
        v
    };
    assert_eq!(strip_out(&a.join("sweep.json")), strip_out(&b.join("sweep.json")));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["spectrum", "--n", "3", "--r", "0.2", "--L", "5", "--N", "32", "--k", "8"];
    let mut one = args.to_vec();
    one.extend(["--jobs", "1"]);
    let mut four = args.to_vec();
    four.extend(["--jobs", "4"]);
    assert!(run(&one, &a).status.success());
    assert!(run(&four, &b).status.success());
    assert_eq!(read(a.join("spectrum.csv")), read(b.join("spectrum.csv")));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, r#"{"sweep_L": []}"#).unwrap();
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let csv = read(dir.path().join("sweep.csv"));
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("n,r,L,N,ratio,"));
}

#[test]
fn certificate_json_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["certificate", "--n", "3", "--r", "0.1", "--L", "10", "--N", "32"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&read(dir.path().join("certificate.json"))).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "certificate");
    for key in ["n", "N"] {
        assert!(v[key].is_u64(), "{key}");
    }
    for key in ["r", "L", "lambda1_sq", "err_lambda", "conjecture_rhs", "err_rhs", "cap_C1", "margin"] {
        assert!(v[key].is_f64(), "{key}: {}", v[key]);
    }
    assert!(v["err_lambda"].as_f64().unwrap() >= 0.0);
    assert!(v["err_rhs"].as_f64().unwrap() >= 0.0);
    let margin = v["conjecture_rhs"].as_f64().unwrap() - v["lambda1_sq"].as_f64().unwrap();
    assert_eq!(margin, v["margin"].as_f64().unwrap());
    assert!(matches!(v["verdict"].as_str(), Some("REFUTED" | "NOT_REFUTED")));
    assert!(v["config"].is_object());
    let csv = read(dir.path().join("certificate.csv"));
    assert_eq!(csv.lines().count(), 2);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("certificate: REFUTED"));
}

#[test]
fn config_round_trips_and_flags_win() {
    let cfg = ExperimentConfig {
        n: 4,
        r: 0.3,
        k: 7,
        eps: vec![0.5, 0.25],
        ..ExperimentConfig::default()
    };
    let text = cfg.to_json();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &text).unwrap();
    let out = run(&["curvature", "--config", path.to_str().unwrap(), "--n", "3", "--N", "32"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&read(dir.path().join("curvature.json"))).unwrap();
    assert_eq!(v["config"]["n"], 3);
    assert_eq!(v["config"]["r"], 0.3);
    assert_eq!(v["config"]["k"], 7);
    assert_eq!(v["config"]["N"], 32);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["oracle", "--profile", "round", "--N", "64"]), 0);
    // resolved but too coarse for the oracle's 1e-3 tolerance
    assert_eq!(code(&["oracle", "--profile", "round", "--N", "35"]), 2);
    assert_eq!(code(&["no-such-command"]), 1);
    assert_eq!(code(&["certificate", "--n", "2"]), 1);
    assert_eq!(code(&["spectrum", "--profile", "round", "--operator", "laplace", "--k", "3000", "--N", "16"]), 3);
    assert_eq!(code(&["curvature", "--N", "4"]), 3);
    let help = Command::new(env!("CARGO_BIN_EXE_pinocchio")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn oracle_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["oracle", "--profile", "round", "--n", "3", "--N", "64"], dir.path());
    assert!(out.status.success());
    let csv = read(dir.path().join("oracle.csv"));
    assert_eq!(csv.lines().count(), 1 + 10 + 6);
    let v: Value = serde_json::from_str(&read(dir.path().join("oracle.json"))).unwrap();
    assert_eq!(v["passed"], true);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}

#[test]
fn every_command_writes_both_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--n", "3", "--r", "0.2", "--L", "2", "--N", "32", "--k", "4", "--modes", "0,1"];
    for cmd in ["spectrum", "curvature", "bounds", "certificate", "conformal"] {
        let mut args = vec![cmd];
        args.extend(common);
        let out = run(&args, dir.path());
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let csv = read(dir.path().join(format!("{cmd}.csv")));
        assert!(csv.lines().count() >= 2, "{cmd}");
        let v: Value = serde_json::from_str(&read(dir.path().join(format!("{cmd}.json")))).unwrap();
        assert_eq!(v["command"], cmd);
        assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1, "{cmd}");
    }
}
