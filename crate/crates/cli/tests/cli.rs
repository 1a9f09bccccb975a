use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_elbowkit"));
    c.env_remove("ELBOWKIT_THREADS");
    c
}

fn write_curve(dir: &TempDir, name: &str, values: &[f64]) -> PathBuf {
    let mut text = String::from("k,value\n");
    for (k, v) in values.iter().enumerate() {
        text.push_str(&format!("{k},{v}\n"));
    }
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn detect_uaed() {
    let dir = TempDir::new().unwrap();
    let f = write_curve(&dir, "c.csv", &[10.0, 4.0, 2.0, 1.0, 0.0]);
    let v = json(&run(&["detect", p(&f), "--criterion", "uaed"]));
    assert_eq!(v["k_star"], 1);
    assert_eq!(v["lambda"], 2.5);
    assert_eq!(v["ties"], serde_json::json!([1]));
    assert_eq!(v["costs"].as_array().unwrap().len(), 5);
}

#[test]
fn detect_bic_matches_enumeration() {
    let dir = TempDir::new().unwrap();
    let values = [10.0, 4.0, 2.0, 1.0, 0.0];
    let f = write_curve(&dir, "c.csv", &values);
    let v = json(&run(&["detect", p(&f), "--criterion", "bic", "--n", "100"]));
    let lambda = 100f64.ln();
    let mut best = (0, f64::INFINITY);
    for (k, x) in values.iter().enumerate() {
        let c = x + lambda * k as f64;
        if c <= best.1 {
            best = (k, c);
        }
    }
    assert_eq!(v["k_star"], best.0);
}

#[test]
fn detect_alpha_and_offset() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.csv");
    fs::write(&path, "# k_min=3\nk,value\n3,10\n4,4\n5,2\n6,1\n7,0\n").unwrap();
    let v = json(&run(&["detect", p(&path)]));
    assert_eq!(v["k_star"], 4);
    let v = json(&run(&["detect", p(&path), "--alpha", "1"]));
    assert_eq!(v["k_star"], 7);
    let v = json(&run(&["detect", p(&path), "--alpha", "0"]));
    assert_eq!(v["k_star"], 3);
    assert!(v["lambda"].is_null());
}

#[test]
fn malformed_row_exits_2_with_line_number() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "k,value\n0,3\na,b\n").unwrap();
    let out = run(&["detect", p(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn rising_curve_exits_2() {
    let dir = TempDir::new().unwrap();
    let f = write_curve(&dir, "up.csv", &[1.0, 2.0, 0.5]);
    assert_eq!(run(&["detect", p(&f)]).status.code(), Some(2));
    assert_eq!(run(&["detect", p(&f), "--tol", "2"]).status.code(), Some(0));
}

#[test]
fn missing_file_exits_1() {
    let out = run(&["detect", "/nonexistent/curve.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flag_combinations_exit_2() {
    let dir = TempDir::new().unwrap();
    let f = write_curve(&dir, "c.csv", &[3.0, 1.0, 0.0]);
    assert_eq!(run(&["detect", p(&f), "--criterion", "bic"]).status.code(), Some(2));
    assert_eq!(run(&["detect", p(&f), "--criterion", "aic", "--alpha", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["detect", p(&f), "--alpha", "1.5"]).status.code(), Some(2));
    let v = json(&run(&["detect", p(&f), "--criterion", "lambda", "--lambda", "0.5"]));
    assert_eq!(v["k_star"], 2);
}

#[test]
fn compare_straight_line_and_constant() {
    let dir = TempDir::new().unwrap();
    let line: Vec<f64> = (0..=8).map(|k| 16.0 - 2.0 * k as f64).collect();
    let f = write_curve(&dir, "line.csv", &line);
    let v = json(&run(&["compare", p(&f), "--n", "50"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["name"], "UAED");
    assert_eq!(rows[0]["k_star"], 8);
    assert_eq!(rows[0]["tied"], true);

    let f = write_curve(&dir, "flat.csv", &[2.0; 6]);
    let v = json(&run(&["compare", p(&f), "--n", "50", "--alpha", "0.3"]));
    for row in v["rows"].as_array().unwrap() {
        assert_eq!(row["k_star"], 0);
    }
}

#[test]
fn compare_aic_not_below_bic() {
    let dir = TempDir::new().unwrap();
    let curve = [300.0, 120.0, 90.0, 80.0, 75.0, 72.0, 70.5, 69.8, 69.0];
    let f = write_curve(&dir, "c.csv", &curve);
    let v = json(&run(&["compare", p(&f), "--n", "400"]));
    let rows = v["rows"].as_array().unwrap();
    let k = |name: &str| rows.iter().find(|r| r["criterion"]["kind"] == name).unwrap()["k_star"].as_u64().unwrap();
    assert!(k("aic") >= k("bic"));
}

#[test]
fn dump_curve_round_trips() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c.csv");
    fs::write(&path, "# k_min=2\nk,value\n2,0.30000000000000004\n3,0.1\n4,0.1000000001\n5,1e-300\n").unwrap();
    let dumped = dir.path().join("dump.csv");
    let d = dir.path().join("dump2.csv");
    json(&run(&["detect", p(&path), "--tol", "1e-6", "--dump-curve", p(&dumped)]));
    json(&run(&["detect", p(&dumped), "--dump-curve", p(&d)]));
    let first = fs::read_to_string(&dumped).unwrap();
    assert_eq!(first, fs::read_to_string(&d).unwrap());
    assert!(first.starts_with("# k_min=2\nk,value\n2,0.30000000000000004\n"));
    // the rise of 1e-10 is clamped on ingestion
    assert!(first.contains("\n4,0.1\n"));
}

#[test]
fn experiment_writes_report_and_histogram() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "experiment", "ar", "--order", "3", "--sigma", "0.5", "--T", "200", "--max-index", "20", "--runs", "20",
        "--seed", "7", "--out", p(dir.path()),
    ]);
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["methods"].as_array().unwrap().len(), 4);
    let table = String::from_utf8_lossy(&out.stderr);
    assert!(table.contains("UAED") && table.contains("HQIC"), "{table}");
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ar_report.json")).unwrap()).unwrap();
    assert_eq!(report["methods"], v["methods"]);
    let csv = fs::read_to_string(dir.path().join("ar_histogram.csv")).unwrap();
    assert!(csv.starts_with("k,UAED,BIC,AIC,HQIC\n"));
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn experiment_is_reproducible_across_thread_caps() {
    let args = ["experiment", "poly", "--runs", "30", "--seed", "3"];
    let strip = |out: &Output| {
        let mut v = json(out);
        v["duration_ms"] = Value::Null;
        v
    };
    let a = strip(&bin().args(args).env("ELBOWKIT_THREADS", "1").output().unwrap());
    let b = strip(&bin().args(args).args(["--threads", "3"]).output().unwrap());
    assert_eq!(a, b);
    let bad = bin().args(args).env("ELBOWKIT_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn experiment_poly_and_small_cluster() {
    let v = json(&run(&["experiment", "poly", "--runs", "20", "--seed", "1"]));
    assert_eq!(v["true_index"], 4);
    let uaed = &v["methods"][0];
    assert_eq!(uaed["label"], "UAED");
    assert!(uaed["p_a"].as_f64().unwrap() >= 0.8);

    let out = run(&[
        "experiment", "cluster", "--runs", "2", "--restarts", "2", "--max-index", "12", "--methods", "uaed",
    ]);
    let v = json(&out);
    assert_eq!(v["true_index"], 4);
    assert_eq!(v["methods"][0]["histogram"].as_array().unwrap().len(), 13);
    assert!(String::from_utf8_lossy(&out.stderr).contains("clusters chosen most often"));
}

#[test]
fn invalid_experiment_exits_2() {
    assert_eq!(run(&["experiment", "ar", "--T", "50"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "poly", "--runs", "0"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "poly", "--methods", "lambda"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "poly", "--lambda", "2"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "poly", "--methods", "lambda", "--lambda", "-1"]).status.code(), Some(2));
}

#[test]
fn experiment_with_fixed_lambda() {
    let v = json(&run(&["experiment", "poly", "--runs", "10", "--methods", "aic,lambda", "--lambda", "2"]));
    assert_eq!(v["methods"][0]["histogram"], v["methods"][1]["histogram"]);
}
