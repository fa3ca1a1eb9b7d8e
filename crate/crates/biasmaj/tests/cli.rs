use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn biasmaj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biasmaj"))
        .args(args)
        .output()
        .expect("spawn biasmaj")
}

fn ok_json(args: &[&str]) -> Value {
    let out = biasmaj(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_kind(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("error json on stderr");
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn meanfield_examples() {
    let v = ok_json(&["meanfield", "--k", "3", "--p", "0.111111111", "--mode", "edge"]);
    assert!(v["regime"] == "critical" || v["regime"] == "subcritical");
    assert!((f(&v["phi_minus"]) - 27.0 / 32.0).abs() < 1e-3);
    assert!((f(&v["phi_plus"]) - 27.0 / 32.0).abs() < 1e-3);

    let v = ok_json(&["meanfield", "--k", "3", "--p", "0.3"]);
    assert_eq!(v["regime"], "supercritical");
    assert_eq!(v["roots"], serde_json::json!([0.0]));

    let v = ok_json(&["meanfield", "--k", "3", "--p", "0.05", "--mode", "node"]);
    assert!((f(&v["phi_plus"]) - 0.940_221_477_563_170_5).abs() < 1e-9);

    let v = ok_json(&["meanfield", "--k", "3", "--p", "0.05", "--q0", "1", "--rounds", "1", "--x", "0.5"]);
    assert!((f(&v["trajectory"][1]) - 0.99275).abs() < 1e-12);
    assert!(v["point"]["derivative"].is_number());

    let v = ok_json(&["meanfield", "--k", "4", "--p", "0.05"]);
    assert_eq!(v["solved_k"], 3);
}

#[test]
fn critical_examples() {
    let v = ok_json(&["critical", "--k", "3"]);
    assert!((f(&v["p_star_k"]) - 1.0 / 9.0).abs() < 1e-9);
    let v = ok_json(&["critical", "--k", "3", "--q", "1.0"]);
    assert_eq!(v["p_star_kq"], v["p_star_k"]);
    let v = ok_json(&["critical", "--k", "5"]);
    let p5 = f(&v["p_star_k"]);
    assert!(p5 > 1.0 / 9.0 && p5 < 0.5);
    let out = biasmaj(&["critical", "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_examples() {
    let v = ok_json(&["simulate", "--graph", "complete:n=500", "--family", "kmaj", "--k", "3", "--p", "0", "--q", "1", "--seed", "1"]);
    assert_eq!(v["censored"], true);
    assert_eq!(f(&v["final_r_fraction"]), 1.0);
    assert_eq!(v["max_rounds"], 263);

    let v = ok_json(&["simulate", "--graph", "complete:n=2000", "--family", "det", "--p", "0.6", "--mode", "edge", "--q", "1", "--seed", "1"]);
    assert_eq!(v["tau"], 1);

    let v = ok_json(&["simulate", "--graph", "complete:n=2000", "--family", "voter", "--p", "0.1", "--q", "1", "--seed", "1"]);
    assert!(v["tau"].as_u64().unwrap() <= 207);
}

#[test]
fn simulate_is_reproducible_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let args = [
        "simulate", "--graph", "gnp:n=300,p=0.2,seed=3", "--k", "3", "--p", "0.2", "--seed", "11",
        "--trace", trace.to_str().unwrap(),
    ];
    let a = biasmaj(&args);
    let b = biasmaj(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("schema,round,r_fraction,phi_min,phi_mean,phi_max"));
    assert_eq!(lines.count(), v["trajectory"].as_array().unwrap().len());
}

#[test]
fn sparse_graph_warns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.txt");
    fs::write(&path, "0 1\n1 2\n").unwrap();
    let spec = format!("file:{}", path.display());
    let out = biasmaj(&["simulate", "--graph", &spec, "--k", "1", "--p", "0.5", "--max-rounds", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["density"]["sparse_warning"], true);
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("sweep.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_phase_transition_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"schema": 1, "graph": "complete:n=2000", "family": "kmaj", "mode": "edge", "k": [3],
            "p": {"min": 0.05, "max": 0.20, "steps": 16}, "q": [1.0], "replicas": 10,
            "max_rounds": 400, "base_seed": 3, "out": "first"}"#,
    );
    let v = ok_json(&["sweep", "--config", &config]);
    let knee = f(&v["curves"][0]["knee"]);
    assert!((knee - 1.0 / 9.0).abs() <= 0.0101, "knee {knee}");

    let second = dir.path().join("second");
    ok_json(&["sweep", "--config", &config, "--out", second.to_str().unwrap()]);
    let a = fs::read(dir.path().join("first/runs.csv")).unwrap();
    let b = fs::read(second.join("runs.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("k,p,q,mode,family,graph,n,seed,tau,censored,final_r_fraction\n"));
    assert_eq!(text.lines().count(), 1 + 16 * 10);

    let summary: Value = serde_json::from_slice(&fs::read(second.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["cells"].as_array().unwrap().len(), 16);
    let low = &summary["cells"][0];
    assert_eq!(low["censored"], 10);
    assert_eq!(low["metastable"], 10);
    assert_eq!(low["prediction"]["regime"], "subcritical");
}

#[test]
fn sweep_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"schema": 1, "graph": "complete:n=50", "k": [3], "p": {"min": 0.1, "max": 0.2, "steps": 0},
            "q": [1.0], "replicas": 2, "out": "o"}"#,
    );
    let out = biasmaj(&["sweep", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "usage");
    assert!(String::from_utf8_lossy(&out.stderr).contains("/p/steps"));
}

#[test]
fn compare_examples() {
    let v = ok_json(&["compare", "--graph", "complete:n=2000", "--k", "3", "--p", "0.05", "--q0", "1", "--rounds", "20"]);
    assert_eq!(v["pass"], true);
    assert_eq!(v["rounds"].as_array().unwrap().len(), 21);
    let v = ok_json(&["compare", "--graph", "complete:n=2000", "--k", "3", "--p", "0.05", "--rounds", "0"]);
    assert_eq!(v["pass"], true);
    let v = ok_json(&["compare", "--graph", "complete:n=500", "--k", "3", "--p", "0.3", "--rounds", "10"]);
    assert!(v["rounds"].as_array().unwrap().len() == 11);
}

#[test]
fn graphgen_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k4.txt");
    ok_json(&["graphgen", "--spec", "complete:n=4", "--out", out.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 6);

    let out = dir.path().join("r.txt");
    let v = ok_json(&["graphgen", "--spec", "regular:n=10,d=3", "--seed", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(v["density"]["min_degree"], 3);
    assert_eq!(v["density"]["max_degree"], 3);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 15);

    let bad = biasmaj(&["graphgen", "--spec", "gnp:n=10,p=0", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(error_kind(&bad), "runtime");
    assert!(String::from_utf8_lossy(&bad.stderr).contains("isolated"));
}

#[test]
fn every_command_has_help() {
    for cmd in ["meanfield", "critical", "simulate", "sweep", "compare", "graphgen"] {
        let out = biasmaj(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"));
    }
    let out = biasmaj(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}
