//! Exit codes and outputs of the `luxloc` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(name)
}

fn luxloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_luxloc")).args(args).output().expect("spawn luxloc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// The example fixture as JSON, edited by `f` and written to a temp file.
fn edited_example(dir: &tempfile::TempDir, f: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(fixture("example_2_12.json")).unwrap()).unwrap();
    f(&mut v);
    let path = dir.path().join("edited.json");
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn check_example_is_certified_and_canonical() {
    let o = luxloc(&["check", fixture("example_2_12.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(luxloc::report::recanonicalise(&text).unwrap(), text);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["certified"], Value::Bool(true));
    assert!((v["q"].as_f64().unwrap() - 1.999).abs() < 1e-12);
}

#[test]
fn check_writes_out_file_identical_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = luxloc(&["check", fixture("example_2_12.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(out).unwrap(), stdout(&o));
}

#[test]
fn check_sweep_adds_rows() {
    let o = luxloc(&["check", fixture("example_2_12.json").to_str().unwrap(), "--sweep", "5"]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["q_sweep"]["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn check_reports_failed_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_example(&dir, |v| v["rho2"] = 7.0.into());
    let o = luxloc(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("H1.3"), "stderr: {}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["certified"], Value::Bool(false));
}

#[test]
fn malformed_input_is_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"A\": ").unwrap();
    assert_eq!(code(&luxloc(&["check", bad.to_str().unwrap()])), 2);

    let unknown = edited_example(&dir, |v| v["surprise"] = 1.into());
    let o = luxloc(&["check", unknown.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("surprise"), "stderr: {}", stderr(&o));

    let missing = dir.path().join("missing.json");
    assert_eq!(code(&luxloc(&["check", missing.to_str().unwrap()])), 2);

    let bad_expr = edited_example(&dir, |v| v["A"] = "1 + * t".into());
    assert_eq!(code(&luxloc(&["check", bad_expr.to_str().unwrap()])), 2);
}

#[test]
fn solve_manufactured_nonlocal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let o = luxloc(&["solve", fixture("manufactured_nonlocal.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["verification"]["pass"], Value::Bool(true));
    let mut rows = 0;
    let mut err: f64 = 0.0;
    for line in fs::read_to_string(out).unwrap().lines().skip(1) {
        let (t, u) = line.split_once(',').unwrap();
        let (t, u): (f64, f64) = (t.parse().unwrap(), u.parse().unwrap());
        err = err.max((u - (std::f64::consts::PI * t).sin()).abs());
        rows += 1;
    }
    assert!(rows > 100);
    assert!(err <= 1e-4, "sup error {err}");
}

#[test]
fn solve_json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.json");
    let o = luxloc(&["solve", fixture("manufactured_local.json").to_str().unwrap(), "--json", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), v["values"].as_array().unwrap().len());
    assert_eq!(v["diagnostics"]["converged"], Value::Bool(true));
}

#[test]
fn solve_zero_source_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited_example(&dir, |v| v["f"] = "0".into());
    let o = luxloc(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "stdout: {}\nstderr: {}", stdout(&o), stderr(&o));
}

#[test]
fn solve_without_convergence_is_exit_3() {
    let o = luxloc(&["solve", fixture("example_2_12.json").to_str().unwrap(), "--max-iter", "1"]);
    assert_eq!(code(&o), 3, "stderr: {}", stderr(&o));
    assert!(stderr(&o).contains("residual history"));
}

fn write_samples(dir: &tempfile::TempDir, n: usize, f: impl Fn(f64) -> f64) -> PathBuf {
    let path = dir.path().join("samples.csv");
    let mut s = String::from("t,u\n");
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        s.push_str(&format!("{t},{}\n", f(t)));
    }
    fs::write(&path, s).unwrap();
    path
}

fn norm_of(samples: &Path, exponent: &str) -> f64 {
    let o = luxloc(&["norm", samples.to_str().unwrap(), exponent]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    stdout(&o).trim().parse().unwrap()
}

#[test]
fn norm_of_constant_and_linear() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_samples(&dir, 129, |_| 1.0);
    assert!((norm_of(&one, "7/2 + 3/2*cos(t)") - 1.0).abs() < 1e-9);
    let t = write_samples(&dir, 2049, |t| t);
    assert!((norm_of(&t, "2") - 1.0 / 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn norm_reads_exponent_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let t = write_samples(&dir, 2049, |t| t);
    let e = dir.path().join("p.txt");
    fs::write(&e, "2\n").unwrap();
    assert!((norm_of(&t, e.to_str().unwrap()) - 1.0 / 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn norm_of_h_reproduces_outer_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let h = write_samples(&dir, 4097, |t| t * (1.0 - t) / 2.0);
    let v = norm_of(&h, "1.999*(7/2 + 3/2*cos(t))");
    let threshold = 1000.0 * 3f64.powf(0.2) / v;
    assert!(rel(threshold, 1.21e4) <= 0.02, "||h|| = {v}, threshold {threshold} vs 1.21e4");
}

#[test]
fn norm_rejects_bad_samples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "t,u\n0,1\n0.5\n").unwrap();
    assert_eq!(code(&luxloc(&["norm", path.to_str().unwrap(), "2"])), 2);
}

fn figure_rows() -> Vec<(String, f64, f64, f64)> {
    let o = luxloc(&["figures", fixture("example_2_12.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("figure,quantity,old,new,improvement_percent"));
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[1].to_string(), c[2].parse().unwrap(), c[3].parse().unwrap(), c[4].parse().unwrap())
        })
        .collect()
}

#[test]
fn figures_contain_example_values() {
    let rows = figure_rows();
    let values: Vec<f64> = rows.iter().flat_map(|r| [r.1, r.2]).collect();
    for (want, tol) in [(15.455, 1e-3), (9.798, 1e-3), (5.770, 1e-3), (1.183, 1e-3), (1.732, 1e-3), (0.02, 1e-6), (0.002, 1e-6), (9965.848, 1e-6)] {
        assert!(values.iter().any(|&v| rel(v, want) <= tol), "no value near {want} in {values:?}");
    }
    let get = |q: &str| rows.iter().find(|r| r.0 == q).unwrap().clone();
    assert!(rel(get("inner_threshold").2, 1.869e-4) <= 0.02);
}

#[test]
fn figures_outer_threshold_matches_printed_value() {
    let rows = figure_rows();
    let outer = rows.iter().find(|r| r.0 == "outer_threshold").unwrap();
    assert!(rel(outer.2, 1.21e4) <= 0.02, "outer threshold {} vs 1.21e4", outer.2);
}

#[test]
fn figures_json_matches_csv() {
    let o = luxloc(&["figures", fixture("example_2_12.json").to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), figure_rows().len());
}

#[test]
fn witness_shows_strict_inclusion() {
    let o = luxloc(&["witness", "--m", "0.4"]);
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["strict_inclusion"], Value::Bool(true));
    assert!(v["sup_coercivity_over_xi0"].as_f64().unwrap() <= -0.05);
}

#[test]
fn witness_with_bad_parameters_is_exit_2() {
    assert_eq!(code(&luxloc(&["witness", "--alpha", "0.6", "--beta", "0.5"])), 2);
}
