use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;
use sparse_sensing::matrixio::save_matrix_auto;
use sparse_sensing::Matrix;

fn ssense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssense")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut g))
}

/// Planted rank-`r` data with a little noise.
fn write_snapshots(dir: &Path, name: &str, r: usize) -> PathBuf {
    let (n, m) = (80, 60);
    let mut left = gaussian(n, r, 1);
    left.scale_cols(&(0..r).map(|i| 20.0 - i as f64).collect::<Vec<_>>());
    let mut x = left.matmul(&gaussian(r, m, 2));
    let noise = gaussian(n, m, 3);
    x.as_mut_slice().iter_mut().zip(noise.as_slice()).for_each(|(a, b)| *a += 1e-3 * b);
    let path = dir.join(name);
    save_matrix_auto(&x, &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn auto_rank_recovers_planted_rank() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_snapshots(dir.path(), "x.ssp", 5);
    let basis = dir.path().join("basis");
    let o = ssense(&["train", "--input", s(&x), "--rank", "auto", "--out", s(&basis)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta = read_json(&basis.join("basis.json"));
    assert_eq!(meta["r"], 5);
    let report = read_json(&basis.join("train_report.json"));
    assert_eq!(report["threshold"]["rank"], 5);
    assert!(report["provenance"]["timestamp_unix"].is_u64());
}

#[test]
fn place_is_deterministic_and_one_based() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_snapshots(dir.path(), "x.csv", 4);
    let basis = dir.path().join("b");
    assert!(ssense(&["train", "--input", s(&x), "--rank", "fixed:4", "--out", s(&basis)]).status.success());
    let args = ["place", "--basis", s(&basis), "--p", "4", "--method", "qr", "--no-timestamp"];
    let first = ssense(&args);
    let second = ssense(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let v: Value = serde_json::from_slice(&first.stdout).unwrap();
    let idx: Vec<u64> = v["indices"].as_array().unwrap().iter().map(|i| i.as_u64().unwrap()).collect();
    assert!(idx.iter().all(|&i| (1..=80).contains(&i)));
    assert_eq!(v["method"], "qr");
    assert!(v["provenance"].get("timestamp_unix").is_none());

    let random = ssense(&["place", "--basis", s(&basis), "--method", "random", "--seed", "17", "--no-timestamp"]);
    let v: Value = serde_json::from_slice(&random.stdout).unwrap();
    assert_eq!(v["seed"], 17);
    assert_eq!(v["provenance"]["seed"], 17);
}

#[test]
fn reconstruct_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let x = write_snapshots(d, "x.ssp", 3);
    let basis = d.join("b");
    let sensors = d.join("s.json");
    let out = d.join("rec.ssp");
    assert!(ssense(&["train", "--input", s(&x), "--rank", "fixed:3", "--no-mean-subtract", "--out", s(&basis)]).status.success());
    assert!(ssense(&["place", "--basis", s(&basis), "--p", "6", "--out", s(&sensors)]).status.success());
    let o = ssense(&["reconstruct", "--basis", s(&basis), "--sensors", s(&sensors), "--truth", s(&x), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read_json(&d.join("rec.json"));
    assert!(report["mean_rel_error"].as_f64().unwrap() < 1e-3);
    assert_eq!(report["p"], 6);
    assert!(report["error_metric"].as_str().unwrap().contains("relative"));

    let o = ssense(&["eval", "--basis", s(&basis), "--sensors", s(&sensors)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["kappa"].as_f64().unwrap() >= 1.0);
    assert!(v["criteria"]["d_optimal"].is_f64());
}

#[test]
fn sweeps_write_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let x = write_snapshots(d, "x.ssp", 6);
    let out = d.join("noise.csv");
    let o = ssense(&[
        "sweep-noise", "--input", s(&x), "--split", "random:3", "--rank", "4", "--etas", "0,0.01,0.1",
        "--out", s(&out), "--no-timestamp",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "method,r,p,eta,mean_rel_error");
    assert_eq!(lines.count(), 12);
    let report = read_json(&d.join("noise.json"));
    assert_eq!(report["split"]["rule"]["kind"], "random");
    assert_eq!(report["provenance"]["seed"], 0);

    let out = d.join("rank.csv");
    let o = ssense(&["sweep-rank", "--input", s(&x), "--ranks", "1:3", "--p-rule", "2r", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("method,r,p,mean_rel_error,std_rel_error\n"));
    assert!(csv.contains("\nqr,3,6,"));
    assert!(csv.contains("\npod_projection,3,80,"));
}

#[test]
fn demos_print_json() {
    let o = ssense(&["fekete", "--degree", "10", "--grid", "200", "--no-timestamp"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["qr_points"].as_array().unwrap().len(), 11);

    let o = ssense(&["cs-demo", "--seed", "3", "--no-timestamp"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["match"], true);
    assert_eq!(v["solver"], "omp");
    assert_eq!(v["k_max"], 6);
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"no-timestamp": true, "fekete": {"degree": 8, "grid": 100}}"#).unwrap();
    let o = ssense(&["--config", s(&cfg), "fekete"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degree"], 8);
    assert!(v["provenance"].get("timestamp_unix").is_none());
    let o = ssense(&["--config", s(&cfg), "fekete", "--degree", "5"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["degree"], 5);

    std::fs::write(&cfg, r#"{"fekete": {"bogus": 1}}"#).unwrap();
    let o = ssense(&["--config", s(&cfg), "fekete"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes_partition_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let o = ssense(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).trim().lines().count(), 1);

    let o = ssense(&["train", "--input", "/nonexistent/x.ssp", "--out", s(d)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).trim().lines().count(), 1);

    let o = ssense(&["fekete", "--degree", "30", "--grid", "10"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = d.join("bad.ssp");
    std::fs::write(&bad, b"SSP1\x04\0\0\0\0\0\0\0\x04\0\0\0\0\0\0\0short").unwrap();
    let o = ssense(&["train", "--input", s(&bad), "--out", s(&d.join("b"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MalformedHeader"));

    // Rows 0 and 1 carry no signal, so sensing only there is singular.
    let mut x = gaussian(10, 8, 5);
    for j in 0..8 {
        x[(0, j)] = 0.0;
        x[(1, j)] = 0.0;
    }
    let xp = d.join("x.ssp");
    save_matrix_auto(&x, &xp).unwrap();
    let basis = d.join("basis");
    assert!(ssense(&["train", "--input", s(&xp), "--rank", "fixed:2", "--no-mean-subtract", "--out", s(&basis)]).status.success());
    let sensors = d.join("s.json");
    std::fs::write(&sensors, r#"{"indices": [1, 2], "n": 10, "method": "qr", "r": 2, "seed": null}"#).unwrap();
    let o = ssense(&["reconstruct", "--basis", s(&basis), "--sensors", s(&sensors), "--truth", s(&xp), "--out", s(&d.join("r.ssp"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("SingularInterpolant"));
    assert_eq!(stderr(&o).trim().lines().count(), 1);

    std::fs::write(&sensors, r#"{"indices": [11], "n": 10, "method": "qr", "r": 1, "seed": null}"#).unwrap();
    let o = ssense(&["eval", "--basis", s(&basis), "--sensors", s(&sensors)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("IndexOutOfRange"));
}
