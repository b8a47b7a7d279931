use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn csma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csma"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("error JSON on stderr")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_cycle() {
    let out = csma(&["analyze", path(&corpus("c4.json"))]);
    let v = stdout_json(&out);
    assert_eq!(v["theta"]["exact"], "2");
    assert_eq!(v["gamma"], 2);
    assert_eq!(v["upsilon"], 2);
    assert_eq!(v["max_activity"], 2);
    assert_eq!(v["manifest"]["command"], "analyze");
    assert_eq!(v["manifest"]["timestamp"], "2023-11-14T22:13:20Z");
    assert!(v["manifest"]["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn identical_manifests_give_identical_reports() {
    let a = csma(&["analyze", path(&corpus("grid2x3.json"))]);
    let b = csma(&["analyze", path(&corpus("grid2x3.json"))]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn analyze_path_markers() {
    let v = stdout_json(&csma(&["analyze", path(&corpus("p3.json"))]));
    assert_eq!(v["upsilon"], "undefined");
    assert_eq!(v["gamma"], "undefined");
    assert_eq!(v["upsilon_per_node"][1], "permanent-starver");
    assert_eq!(v["jain"]["exact"], "2/3");
}

#[test]
fn malformed_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "{\"num_nodes\": 3, ").unwrap();
    let out = csma(&["analyze", path(&f)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "json");

    std::fs::write(
        &f,
        r#"{"num_nodes": 2, "num_channels": 1, "edges": {"shared": [[0, 0]]}, "rates": {"kind": "homogeneous", "nu": 1}}"#,
    )
    .unwrap();
    let out = csma(&["analyze", path(&f)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "schema");
}

#[test]
fn state_cap_exits_3() {
    let out = csma(&["--cap", "3", "dominants", path(&corpus("c4.json"))]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"]["kind"], "cap_exceeded");
}

#[test]
fn sweep_columns() {
    let v = stdout_json(&csma(&["sweep-channels", path(&corpus("c4.json")), "--c-max", "3"]));
    let theta: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["theta"]["exact"].as_str().unwrap()).collect();
    assert_eq!(theta, ["2", "2", "4/3"]);
    let v = stdout_json(&csma(&["sweep-channels", path(&corpus("star3.json")), "--c-max", "2"]));
    let theta: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["theta"]["exact"].as_str().unwrap()).collect();
    assert_eq!(theta, ["3", "2"]);
    assert_eq!(v["theta_violations"], serde_json::json!([]));
}

#[test]
fn dominants_and_starvation() {
    let v = stdout_json(&csma(&["dominants", path(&corpus("k3_c2.json"))]));
    assert_eq!(v["dominant_count"], 6);
    assert_eq!(v["max_activity"], 2);
    let v = stdout_json(&csma(&["starvation", path(&corpus("c4.json"))]));
    assert_eq!(v["delta_matrix"], serde_json::json!([[0, 2], [2, 0]]));
    assert_eq!(v["upsilon_per_node"], serde_json::json!([2, 2, 2, 2]));
}

#[test]
fn hitting_csv_table() {
    let out = csma(&["hitting", path(&corpus("k2.json")), "--from", "10", "--to", "01", "--nu-grid", "10,100,1000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("nu,value,log_nu_value"));
    let first: Vec<f64> = rows.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first[0], 10.0);
    assert!((first[1] - 2.1).abs() < 1e-12);
    assert!(text.contains("# input_digest: sha256:"));
}

#[test]
fn hitting_rejects_infeasible_state() {
    let out = csma(&["hitting", path(&corpus("k2.json")), "--from", "11"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "infeasible_state");
}

#[test]
fn mixing_formats() {
    let out = csma(&["mixing", path(&corpus("c4.json"))]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("nu,value,log_nu_value"));
    let v = stdout_json(&csma(&["mixing", path(&corpus("c4.json")), "--format", "json"]));
    assert_eq!(v["boundary_ok"], true);
    assert_eq!(v["predicted_exponent"], 1.0);
    let out = csma(&["mixing", path(&corpus("p3.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_logs_events() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.csv");
    let args = |log: &Path| {
        vec![
            "simulate".to_string(),
            corpus("k2.json").to_string_lossy().into_owned(),
            "--nu".into(),
            "2".into(),
            "--seed".into(),
            "9".into(),
            "--replicas".into(),
            "2".into(),
            "--horizon".into(),
            "50".into(),
            "--events".into(),
            log.to_string_lossy().into_owned(),
        ]
    };
    let run = |log: &Path| {
        let a = args(log);
        csma(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let a = run(&log);
    let first_log = std::fs::read_to_string(&log).unwrap();
    let b = run(&log);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(first_log, std::fs::read_to_string(&log).unwrap());
    let v = stdout_json(&a);
    assert_eq!(v["manifest"]["seed"], 9);
    let frac = v["stats"]["node_active_fraction"].as_array().unwrap();
    assert!(frac.iter().all(|f| (0.0..=1.0).contains(&f.as_f64().unwrap())));
    assert!(first_log.contains("replica,time,node,channel,activate"));
    assert!(first_log.lines().filter(|l| !l.starts_with('#')).count() > 10);
}

#[test]
fn simulate_rejects_bad_config() {
    let out = csma(&["simulate", path(&corpus("k2.json")), "--backoff", "det"]);
    assert_eq!(out.status.code(), Some(2));
    let out = csma(&["simulate", path(&corpus("k2.json")), "--backoff", "gamma", "--mode", "event"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emit_virtual_graph() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("virtual.json");
    let out = csma(&["analyze", path(&corpus("c4_c2.json")), "--emit-virtual", path(&f)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    assert_eq!(v["num_virtual_nodes"], 8);
    // 4 conflict edges per channel plus one channel-exclusion edge per node
    assert_eq!(v["edges"].as_array().unwrap().len(), 4 * 2 + 4);
}

#[test]
fn verify_shipped_corpus() {
    let dir = corpus("");
    let out = csma(&["verify", path(&dir)]);
    let v = stdout_json(&out);
    assert_eq!(v["failed"], 0);
    assert!(v["instances"].as_u64().unwrap() >= 11);
}

#[test]
fn verify_flags_corrupted_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(corpus("c4.json")).unwrap()).unwrap();
    file["expected"]["delta_matrix"] = serde_json::json!([[0, 1], [1, 0]]);
    std::fs::write(dir.path().join("c4.json"), file.to_string()).unwrap();
    let out = csma(&["verify", path(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&Value> = v["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "fail").collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["check"], "expected_values");
    assert!(failed[0]["detail"].as_str().unwrap().contains("delta_matrix"));
}

#[test]
fn verify_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let out = csma(&["verify", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["error"]["message"].as_str().unwrap().contains("no instances"));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("report.json");
    let out = csma(&["--output", path(&f), "dominants", path(&corpus("k2.json"))]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    assert_eq!(v["dominant_count"], 2);
}
