//! End-to-end runs of the `mmc` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmc")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// Records of the CSV under the echo line, as header-keyed rows.
fn records(text: &str) -> Vec<Vec<(String, String)>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    reader
        .records()
        .map(|r| header.iter().cloned().zip(r.unwrap().iter().map(String::from)).collect())
        .collect()
}

/// Field `key` of the first data row.
fn field(text: &str, key: &str) -> String {
    let rows = records(text);
    let row = rows.first().expect("one data row");
    row.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("no column {key}")).1.clone()
}

#[test]
fn demo_matches_golden() {
    let out = stdout(&mmc(&["demo"]));
    assert_eq!(out, include_str!("golden/demo.txt"));
}

#[test]
fn snf_prints_factors_and_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.txt", "# worked example\n2 3\n4 3 6\n6 7 2\n");
    let out = stdout(&mmc(&["snf", &path, "--ring", "z:2:3"]));
    assert!(out.starts_with("# mmc snf ring="), "{out}");
    assert!(out.contains("D =\n2 3\n1 0 0\n0 2 0\n"), "{out}");
    assert!(out.ends_with("shape = (1,2,2)\n"), "{out}");
}

#[test]
fn capacity_single_packet_z4() {
    let out = stdout(&mmc(&["capacity", "--ring", "z:2:2", "--n", "1", "--lambda", "1,1", "--bits"]));
    assert!(out.starts_with("# mmc capacity ring="), "{out}");
    assert_eq!(field(&out, "capacity_qdigits"), "1.25");
    assert_eq!(field(&out, "capacity_bits"), "1.25");
}

#[test]
fn exit_codes() {
    let bad_flag = mmc(&["capacity", "--ring", "z:2:2", "--bogus"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let bad_ring = mmc(&["capacity", "--ring", "z:6:2", "--n", "1", "--lambda", "1,1"]);
    assert_eq!(bad_ring.status.code(), Some(2));

    let no_beta = mmc(&["simulate", "--ring", "z:2:2", "--n", "2", "--lambda", "2,2", "--model", "uniform"]);
    assert_eq!(no_beta.status.code(), Some(2));

    let too_big = mmc(&["capacity", "--ring", "z:2:3", "--n", "4", "--lambda", "1,1,1"]);
    assert_eq!(too_big.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&too_big.stderr).contains("--mc"));
}

#[test]
fn monte_carlo_capacity_reports_error_bars() {
    let out = stdout(&mmc(&[
        "capacity", "--ring", "z:2:3", "--n", "4", "--lambda", "1,1,1", "--mc", "2000", "--seed", "3",
    ]));
    assert_eq!(field(&out, "trials"), "2000");
    assert!(field(&out, "stderr").parse::<f64>().unwrap() > 0.0);
}

#[test]
fn shapedist_sums_to_one() {
    let out = stdout(&mmc(&["shapedist", "--ring", "z:2:2", "--n", "2", "--lambda", "1,1"]));
    let rows = records(&out);
    let get = |row: &Vec<(String, String)>, key: &str| row.iter().find(|(k, _)| k == key).unwrap().1.clone();
    let total: f64 = rows.iter().map(|r| get(r, "probability").parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12, "{out}");
    assert!(rows.iter().all(|r| get(r, "mode") == "exact"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "exp.json",
        r#"{"ring": "z:2:2", "n": 2, "lambda": [2, 2], "model": {"type": "constant_shape", "rho": "1,2"},
            "trials": 200, "seed": 5}"#,
    );
    let out = stdout(&mmc(&["simulate", "--config", &cfg, "--trials", "50"]));
    assert_eq!(field(&out, "trials"), "50");
    assert_eq!(field(&out, "seed"), "5");
    assert_eq!(field(&out, "beta"), "0,1");
    assert_eq!(field(&out, "errors"), "0");
}

#[test]
fn table_model_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.txt", "prob 0.5\n1 1\n1\nprob 0.5\n1 1\n2\n");
    let cfg = write(
        dir.path(),
        "exp.json",
        r#"{"ring": "z:2:2", "n": 1, "lambda": "1,1", "model": {"type": "table", "table_path": "t.txt"}}"#,
    );
    let out = stdout(&mmc(&["capacity", "--config", &cfg]));
    // shape (1,1) carries 2 digits, shape (0,1) carries 1
    assert_eq!(field(&out, "capacity_qdigits"), "1.5");
}

#[test]
fn out_file_appends_without_repeating_header() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("cap.csv");
    let out = out_path.to_str().unwrap();
    for n in ["1", "2"] {
        let run = mmc(&["capacity", "--ring", "z:2:2", "--n", n, "--lambda", "1,1", "--out", out]);
        assert!(run.status.success());
        assert!(run.stdout.is_empty());
    }
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("ring,")).count(), 1, "{text}");
    assert_eq!(records(&text).len(), 2, "{text}");
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate", "--ring", "z:2:2", "--n", "2", "--lambda", "2,2", "--model", "uniform", "--beta", "0,1",
        "--trials", "500", "--seed", "42",
    ];
    let a = stdout(&mmc(&args));
    let b = stdout(&mmc(&args));
    assert_eq!(a, b);
    let errors: u64 = field(&a, "errors").parse().unwrap();
    let stages: u64 = (0..2).map(|i| field(&a, &format!("stage{i}_failures")).parse::<u64>().unwrap()).sum();
    assert_eq!(errors, stages, "every failure is attributed to a stage");
}
