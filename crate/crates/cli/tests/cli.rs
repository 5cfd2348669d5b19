use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paradis::{channels_from_subspace, CMat, OperatorSubspace, C64};
use serde_json::Value;

fn paradis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paradis"))
        .args(args)
        .env_remove("PARADIS_SEED")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn write_matrix(dir: &Path, name: &str, re: [[f64; 2]; 2], im: [[f64; 2]; 2]) -> PathBuf {
    let path = dir.join(name);
    let body = serde_json::json!({ "d_rows": 2, "d_cols": 2, "re": re, "im": im });
    std::fs::write(&path, body.to_string()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ZERO: [[f64; 2]; 2] = [[0.0, 0.0], [0.0, 0.0]];

#[test]
fn identity_is_never_distinguishable() {
    let dir = tempfile::tempdir().unwrap();
    let id = write_matrix(dir.path(), "id.json", [[1.0, 0.0], [0.0, 1.0]], ZERO);
    let out = paradis(&["field-angle", "--matrix", s(&id)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["outcome"]["optimal_n"], "never");
    assert_eq!(r["outcome"]["classification"], "POINTED_CONE");
}

#[test]
fn onedim_reports_witness_and_copy_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_matrix(dir.path(), "a.json", [[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]);
    let r = report(&paradis(&["onedim", "--matrix", s(&a)]));
    assert_eq!(r["outcome"]["optimal_n"], 2);
    assert_eq!(r["outcome"]["witness"]["d_rows"], 4);
    assert!(r["residuals"]["overlap"].as_f64().unwrap() < 1e-10);

    let r = report(&paradis(&["onedim", "--matrix", s(&a), "--copies", "1"]));
    assert!(r["outcome"]["witness"].is_null());
}

#[test]
fn one_copy_lp_is_feasible_only_at_pi() {
    let out = paradis(&["--pi-units", "salpha", "solve", "--n", "1", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["outcome"]["feasible"], true);
    let p: Vec<f64> = serde_json::from_value(r["outcome"]["p"].clone()).unwrap();
    assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));

    let out = paradis(&["salpha", "solve", "--n", "1", "--alpha", "2.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["outcome"]["feasible"], false);

    // eight digits of π: infeasible, but inside the boundary band
    let out = paradis(&["salpha", "solve", "--n", "1", "--alpha", "3.14159265"]);
    assert_eq!(out.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["outcome"]["boundary"], true);
}

#[test]
fn counterexample_small() {
    let out = paradis(&["salpha", "counterexample", "--max-n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["outcome"]["all_infeasible"], true);
    assert_eq!(r["outcome"]["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_closed_forms() {
    let r = report(&paradis(&["--pi-units", "salpha", "verify", "--n", "3", "--alpha", "0.7"]));
    assert_eq!(r["outcome"]["nonnegative"], true);
    assert!(r["outcome"]["residual"].as_f64().unwrap() < 1e-10);
    let r = report(&paradis(&["--pi-units", "salpha", "verify", "--n", "3", "--alpha", "0.6"]));
    assert_eq!(r["outcome"]["nonnegative"], false);
}

#[test]
fn scan_writes_csv() {
    let out = paradis(&["--jobs", "2", "salpha", "scan", "--n", "2", "--grid", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["n", "alpha", "feasible", "phase1_objective", "alpha_star_refined"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert!(rows.len() > 100);
    let star: f64 = rows[0][4].parse().unwrap();
    assert!((star - 0.75 * std::f64::consts::PI).abs() < 1e-5);
    assert_eq!(&rows.last().unwrap()[2], "1");
}

#[test]
fn hermitian_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let z = write_matrix(dir.path(), "z.json", [[1.0, 0.0], [0.0, -1.0]], ZERO);
    let id = write_matrix(dir.path(), "id.json", [[1.0, 0.0], [0.0, 1.0]], ZERO);
    let r = report(&paradis(&["hermitian", "--generators", s(&z)]));
    assert_eq!(r["outcome"]["kind"], "WITNESS");
    assert!(r["residuals"]["max_constraint"].as_f64().unwrap() < 1e-7);
    let r = report(&paradis(&["hermitian", "--generators", s(&z), s(&id)]));
    assert_eq!(r["outcome"]["kind"], "CERTIFICATE");
    assert!(r["outcome"]["certificate"]["lambda_min"].as_f64().unwrap() >= 1e-9);
}

#[test]
fn check_stops_at_first_witness() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_matrix(dir.path(), "a.json", [[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]);
    let w = dir.path().join("w.json");
    let out = paradis(&["check", "--generators", s(&a), "--max-copies", "3", "--witness-out", s(&w)]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["outcome"]["distinguishable_at"], 2);
    assert_eq!(r["outcome"]["rows"].as_array().unwrap().len(), 2);
    assert!(w.exists());
}

#[test]
fn synthesize_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_matrix(dir.path(), "a.json", [[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]);
    let pair = dir.path().join("pair");
    let r = report(&paradis(&["synthesize", "--generators", s(&a), "--out", s(&pair)]));
    assert!(r["residuals"]["subspace_distance"].as_f64().unwrap() < 1e-8);

    // emitted matrices re-parse to the library's values
    let t = OperatorSubspace::from_generators(
        &[CMat::from_diag(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)])],
        2,
    )
    .unwrap();
    let lib = channels_from_subspace(&t).unwrap();
    let text = std::fs::read_to_string(pair.join("E_0.json")).unwrap();
    let file: Value = serde_json::from_str(&text).unwrap();
    let m = &lib.e.kraus()[0];
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let re = file["re"][i][j].as_f64().unwrap();
            let im = file["im"][i][j].as_f64().unwrap();
            assert!((re - m[(i, j)].re).abs() <= 1e-15 && (im - m[(i, j)].im).abs() <= 1e-15);
        }
    }

    let r = report(&paradis(&["simulate", "--pair", s(&pair), "--copies", "2"]));
    assert_eq!(r["outcome"]["orthogonal"], true);
    let r = report(&paradis(&["simulate", "--pair", s(&pair), "--copies", "1"]));
    assert!(r["outcome"]["witness"].is_null());
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let z = write_matrix(dir.path(), "z.json", [[1.0, 0.5], [0.5, -1.0]], ZERO);
    let run = || {
        let mut r = report(&paradis(&["hermitian", "--generators", s(&z)]));
        r["wall_time_s"] = Value::Null;
        serde_json::to_string(&r).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn seed_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_paradis"))
        .args(["salpha", "counterexample", "--max-n", "1"])
        .env("PARADIS_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(report(&out)["seed"], 42);
    let out = Command::new(env!("CARGO_BIN_EXE_paradis"))
        .args(["salpha", "counterexample", "--max-n", "1"])
        .env("PARADIS_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"d_rows\": 2,\n  \"d_cols\": ]").unwrap();
    let out = paradis(&["field-angle", "--matrix", s(&bad)]);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2 column"));

    let ragged = dir.path().join("ragged.json");
    std::fs::write(&ragged, r#"{"d_rows":2,"d_cols":2,"re":[[1,0]],"im":[[0,0],[0,0]]}"#).unwrap();
    assert_eq!(paradis(&["field-angle", "--matrix", s(&ragged)]).status.code(), Some(65));

    assert_eq!(paradis(&["salpha", "verify", "--n", "5", "--alpha", "2"]).status.code(), Some(64));
    assert_eq!(paradis(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(paradis(&["salpha", "solve", "--n", "2", "--alpha", "1.0"]).status.code(), Some(64));
    assert_eq!(paradis(&["salpha", "counterexample", "--max-n", "9"]).status.code(), Some(70));
    assert_eq!(paradis(&["salpha", "scan", "--n", "19"]).status.code(), Some(70));
    assert_eq!(paradis(&["--help"]).status.code(), Some(0));
}
