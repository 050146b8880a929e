use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spiral-stab")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spiral-stab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn params_and_validation() {
    let out = run(&["params", "--a", "2", "--M", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-12);
    assert!((v["mu"].as_f64().unwrap() - 0.096_933_023_279_475_2).abs() < 1e-14);
    assert_eq!(run(&["params", "--a", "2", "--M", "2"]).status.code(), Some(2));
    assert_eq!(run(&["params", "--a", "0", "--M", "3"]).status.code(), Some(2));
    assert_eq!(run(&["params", "--a", "2"]).status.code(), Some(2));
}

#[test]
fn mu_and_g_need_unchecked() {
    assert_eq!(run(&["stability", "--mu", "0.2"]).status.code(), Some(2));
    let out = run(&["stability", "--unchecked", "--mu", "0.2", "--g", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["mu"].as_f64(), Some(0.2));
}

#[test]
fn half_frequency_suite_skips_entrywise_checks() {
    let out = run(&["suite", "--a", "2", "--alpha", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("SKIPPED(at_half)"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entries = v["verify"]["entries"].as_array().unwrap();
    let agg = entries.iter().find(|e| e["name"] == "aggregate c+ mode integral").unwrap();
    assert_eq!(agg["status"], "PASS");
}

#[test]
fn sweep_writes_csv_json_and_manifests() {
    let csv = scratch("grid.csv");
    let json = scratch("grid.json");
    let out = run(&[
        "sweep", "--M", "4", "--n-a", "3", "--n-alpha", "4", "--out", csv.to_str().unwrap(), "--json", json.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("M,a,alpha,mu,g,delta,im_P,margin,at_half,error\n"));
    assert_eq!(text.lines().count(), 13);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 12);
    for p in [&csv, &json] {
        let mut side = p.clone().into_os_string();
        side.push(".manifest.json");
        assert!(PathBuf::from(side).exists());
    }
    let neg = run(&["sweep", "--relative", "--alpha-min", "-0.05", "--alpha-max", "0.05", "--n-a", "2", "--n-alpha", "2"]);
    assert_eq!(neg.status.code(), Some(0));
}

#[test]
fn simulate_exports_trajectory() {
    let csv = scratch("traj.csv");
    let out = run(&["simulate", "--kind", "full", "--init", "symmetric", "--s1", "4", "--steps", "40", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("s,re_0,im_0,"));
    assert_eq!(text.lines().count(), 42);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["compatible_init"], true);
    let fit = v["fit"]["delta_fit"].as_f64().unwrap();
    assert!(fit.is_finite());
}

#[test]
fn verify_and_operator_check_pass_by_default() {
    for cmd in ["verify", "operator-check", "coeffs"] {
        let out = run(&[cmd]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn thread_cap_does_not_change_output() {
    let one = Command::new(env!("CARGO_BIN_EXE_spiral-stab"))
        .env("SPIRAL_STAB_THREADS", "1")
        .args(["sweep", "--n-a", "6", "--n-alpha", "6"])
        .output()
        .unwrap();
    let many = run(&["sweep", "--n-a", "6", "--n-alpha", "6"]);
    assert_eq!(one.stdout, many.stdout);
}
