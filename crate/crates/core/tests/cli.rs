use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const FINITE: &str = r#"{
    "world": {"kind": "random-constants"},
    "world_seed": 3,
    "estimators": [
        {"kind": "aol", "epsilon": {"rule": "vc"}, "target": {"setting": "finite-aggregate"}},
        {"kind": "erm", "target": {"setting": "finite-erm"}}
    ],
    "n_grid": [32, 64, 128],
    "replications": 4
}"#;

#[test]
fn run_writes_outputs_and_report_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FINITE);
    let out = dir.path().join("out");
    let res = aol(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "2", "--seed", "9"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("rows.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("world_id,estimator,n,rep,seed,epsilon,n_cells,excess_risk,fit_wall_ms")
    );
    assert_eq!(lines.count(), 2 * 3 * 4);
    assert!(out.join("summary.json").exists() && out.join("rates.svg").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["base_seed"], 9);

    let again = dir.path().join("again");
    aol(&["run", "--config", &cfg, "--out", again.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(fs::read(out.join("rows.csv")).unwrap(), fs::read(again.join("rows.csv")).unwrap());

    let report = aol(&["report", "--in", out.to_str().unwrap()]);
    assert_eq!(report.status.code(), Some(0));
    let text = String::from_utf8_lossy(&report.stdout);
    assert!(text.contains("Aggregation-of-leaders") && text.contains("finite"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"world": {"kind": "gap-pair"}, "estimators": [], "n_grid": [8], "replications": 1}"#);
    assert_eq!(aol(&["run", "--config", &bad]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(aol(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(aol(&["bounds", "--query", "{not json"]).status.code(), Some(2));
    assert_eq!(aol(&["bounds", "--query", r#"{"op": "psi-nms", "n": 10, "m": 2, "s": 3}"#]).status.code(), Some(2));
}

#[test]
fn partial_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"world": {"kind": "random-constants"},
            "estimators": [{"kind": "erm"}, {"kind": "sparse-convex"}],
            "n_grid": [8], "replications": 2}"#,
    );
    let out = dir.path().join("out");
    let res = aol(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let csv = fs::read_to_string(out.join("rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2);
}

#[test]
fn bounds_prints_json() {
    let res = aol(&["bounds", "--query", r#"[{"op": "psi-nms", "n": 100, "m": 10, "s": 1}, {"op": "barpsi", "n": 4096, "p": 4, "delta2": 0.09}]"#]);
    assert_eq!(res.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!((v[0]["psi_nms"].as_f64().unwrap() - 0.0330259).abs() < 1e-6);
    assert_eq!(v[1]["barpsi"].as_f64().unwrap(), 0.09);
    assert_eq!(v[1]["breakpoints"][0].as_f64().unwrap(), 0.0625);
}

#[test]
fn selftest_passes() {
    let res = aol(&["selftest"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let text = String::from_utf8_lossy(&res.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn report_on_empty_directory_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let res = aol(&["report", "--in", dir.path().to_str().unwrap()]);
    assert_ne!(res.status.code(), Some(0));
}
