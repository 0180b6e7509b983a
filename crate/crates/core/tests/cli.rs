use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bssn-lab"));
    cmd.env_remove("BSSN_LAB_OUT_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.push("--json");
    let out = run(&full);
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

#[test]
fn verify_scaling_passes() {
    let (code, v) = report(&["verify", "--kappa-grid", "1e-3:1e-1:7", "--eta", "0.3", "--theta-bs", "0.5"]);
    assert_eq!(code, 0);
    assert_eq!(v["command"], "verify");
    assert_eq!(v["result"]["pass"], true);
    for e in v["result"]["entries"].as_array().unwrap() {
        if e["status"] == "in_band" {
            assert!((e["fit"]["slope"].as_f64().unwrap() - 2.0).abs() < 0.05);
        }
    }
}

#[test]
fn verify_linear_map_is_exact() {
    let (code, v) = report(&["verify", "--kappa", "0"]);
    assert_eq!(code, 0);
    for e in v["result"]["entries"].as_array().unwrap() {
        assert!(e["norm"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--kappa", "zero"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--dims", "4,4,4"]).status.code(), Some(2));
    assert_eq!(run(&["compare"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ not json").unwrap();
    let out = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}

#[test]
fn family_reports_nullspace() {
    let (code, v) = report(&["family", "--theta-bs", "0.7"]);
    assert_eq!(code, 0);
    let r = &v["result"];
    assert_eq!(r["nullspace"]["dimension"], 3);
    assert!(r["family_fit"]["family_in_nullspace"].as_f64().unwrap() < 1e-9);
    assert!(r["family_fit"]["discrepancy"].is_string());

    let (_, v) = report(&["family", "--theta-bs", "0.7", "--drop-energy"]);
    let r = &v["result"];
    assert!(r["nullspace"]["dimension"].as_u64().unwrap() > 3);
    let extras = r["family_fit"]["extra_directions"].as_array().unwrap();
    assert!(extras.iter().any(|d| d["intermediates"]["m"].as_f64().unwrap().abs() > 1e-6));
    assert!(extras.iter().any(|d| d["intermediates"]["r0"].as_f64().unwrap().abs() > 1e-6));

    let (_, v) = report(&["family", "--theta-bs", "0"]);
    assert_eq!(v["result"]["nullspace"]["dimension"], 3);
}

#[test]
fn sweep_csv_crosses_zero_at_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--quantity", "eq15", "--kappa", "0:0.3:31", "--x", "1", "--y", "1", "--format", "csv"])
        .env("BSSN_LAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header, ["quantity", "kappa", "eta", "theta_bs", "theta", "x", "y", "kappa_sum", "value", "singular"]);
    assert!(text.starts_with("# bssn-lab "));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[8].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 31);
    let crossing = rows.windows(2).find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0).unwrap();
    assert!(crossing[0].0 < 0.125 && crossing[1].0 >= 0.125 - 1e-12);

    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["kappa"], "0:0.3:31");
    assert!(json["version"].is_string());
}

#[test]
fn compare_gives_verdicts() {
    let (code, v) = report(&[
        "compare", "--quantity", "eq16", "--x", "1", "--y", "1", "--eta", "-0.7854", "--kappa-grid", "1e-3:3e-2:5",
    ]);
    assert_eq!(code, 0);
    let res = v["result"].as_array().unwrap();
    assert_eq!(res.len(), 1);
    assert_eq!(res[0]["verdict"], "MISMATCH");

    let (_, v) = report(&["compare", "--quantity", "eq14", "--both-theta-branches"]);
    let res = v["result"].as_array().unwrap();
    assert_eq!(res.len(), 2);
    assert_eq!(res[0]["branch"], "stated");
    assert_eq!(res[1]["branch"], "shifted");

    let (_, v) = report(&["compare", "--quantity", "eq14", "--branch", "shifted"]);
    assert_eq!(v["result"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"theta_bs": 0.25}"#).unwrap();
    let (code, v) = report(&["family", "--theta-bs", "0.9", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["config"]["theta_bs"], 0.25);
    assert_eq!(v["result"]["theta_bs"], 0.25);
}

#[test]
fn out_dir_flag_beats_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify", "--kappa", "0", "--out-dir", flag_dir.path().to_str().unwrap()])
        .env("BSSN_LAB_OUT_DIR", env_dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.path().join("verify.json").exists());
    assert!(!env_dir.path().join("verify.json").exists());
}
