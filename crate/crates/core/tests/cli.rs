use std::path::Path;

use mb_core::cli::{read_csv_rows, run, RunManifest, EXIT_FAILED_CHECK, EXIT_INVALID};

fn argv(parts: &[&str]) -> Vec<String> {
    std::iter::once("mb").chain(parts.iter().copied()).map(String::from).collect()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn sample_shape_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = out.to_str().unwrap();
    let code = run(&argv(&["sample", "--family", "laguerre", "--theta", "2", "--c", "0", "--n", "50", "--replicas", "100", "--seed", "7", "--out", o]));
    assert_eq!(code, 0);
    let rows = read_csv_rows(&out).unwrap();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.len() == 50 && r.windows(2).all(|w| w[0] >= w[1])));
    let m = RunManifest::from_csv(&out).unwrap();
    assert_eq!(m.seed, Some(7));
    assert_eq!(m.params.unwrap()["n"], 50);
    assert_eq!(files_in(dir.path()), vec!["s.csv"]);
}

#[test]
fn manifest_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let code = run(&argv(&["sample", "--family", "jacobi", "--theta", "1.5", "--c1", "0.5", "--c2", "1", "--n", "6", "--replicas", "5", "--seed", "3", "--out", out.to_str().unwrap()]));
    assert_eq!(code, 0);
    let m = RunManifest::from_csv(&out).unwrap();
    let replay = dir.path().join("b.csv");
    let mut cmd = m.command_line.clone();
    let pos = cmd.iter().position(|a| a == "--out").unwrap();
    cmd[pos + 1] = replay.to_str().unwrap().to_string();
    assert_eq!(run(&cmd), 0);
    assert_eq!(read_csv_rows(&out).unwrap(), read_csv_rows(&replay).unwrap());
}

#[test]
fn jacobi_density_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    assert_eq!(run(&argv(&["density", "--family", "jacobi", "--theta", "1", "--grid", "200", "--out", out.to_str().unwrap()])), 0);
    let rows = read_csv_rows(&out).unwrap();
    assert_eq!(rows.len(), 200);
    let half = rows.iter().find(|r| r[0] == 0.5).unwrap();
    assert!((half[1] - 2.0 / std::f64::consts::PI).abs() < 1e-10);
}

#[test]
fn moments_and_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    assert_eq!(run(&argv(&["moments", "--family", "laguerre", "--theta", "2", "--max-p", "3", "--out", m.to_str().unwrap()])), 0);
    let rows = read_csv_rows(&m).unwrap();
    let want = [1.0, 1.0, 3.0, 12.0];
    for (r, w) in rows.iter().zip(want) {
        assert!((r[1] - w).abs() < 1e-12 * w);
    }
    let k = dir.path().join("k.csv");
    assert_eq!(run(&argv(&["kernel", "--family", "jacobi", "--theta", "2", "--c1", "0", "--c2", "1", "--n", "4", "--grid", "4", "--out", k.to_str().unwrap()])), 0);
    let rows = read_csv_rows(&k).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.len() == 3 && r[2].is_finite()));
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(run(&argv(&["verify", "--suite", "kernel-oracle", "--seeds", "1,2,3", "--out", out.to_str().unwrap()])), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["reports"].as_array().unwrap().iter().all(|r| r["pass"] == true));
    assert_eq!(v["manifest"]["seed"], 1);
}

#[test]
fn failing_check_exits_two() {
    // theta = 1/2, c = 3 converges too slowly to meet the 0.05 cap at N = 100
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.csv");
    let rep = dir.path().join("h.json");
    let code = run(&argv(&["hardedge", "--theta", "0.5", "--c", "3", "--grid", "2", "--out", out.to_str().unwrap(), "--convergence", rep.to_str().unwrap()]));
    assert_eq!(code, EXIT_FAILED_CHECK);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["reports"][0]["pass"], false);
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = out.to_str().unwrap();
    assert_eq!(run(&argv(&["sample", "--family", "laguerre", "--theta", "2", "--n", "0", "--out", o])), EXIT_INVALID);
    assert_eq!(run(&argv(&["sample", "--family", "nope", "--theta", "2", "--n", "3", "--out", o])), EXIT_INVALID);
    assert_eq!(run(&argv(&["verify", "--suite", "nope"])), EXIT_INVALID);
    assert_eq!(run(&argv(&["density", "--family", "laguerre", "--theta", "-1", "--out", o])), EXIT_INVALID);
    assert!(files_in(dir.path()).is_empty());
    // negative exponents in (-1, 0) are valid
    assert_eq!(run(&argv(&["sample", "--family", "laguerre", "--theta", "1.5", "--c", "-0.5", "--n", "3", "--out", o])), 0);
    assert_eq!(run(&argv(&["sample", "--family", "laguerre", "--theta", "1.5", "--c", "-1.5", "--n", "3", "--out", o])), EXIT_INVALID);
}
