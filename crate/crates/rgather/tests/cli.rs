//! End-to-end runs of the command-line tool.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rgather"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

const PAIRS: &str = "dim=1\n0,0\n1,1\n10,10\n11,11\n";

#[test]
fn cluster_two_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "pts.csv", PAIRS);
    let out = run(&["cluster", "--input", &pts, "--r", "2", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], "rgather/1");
    assert_eq!(v["clusters"].as_array().unwrap().len(), 2);
    assert_eq!(v["max_radius"], 1.0);
    assert_eq!(v["R_used"], 1.0);
}

#[test]
fn cluster_output_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "pts.csv", PAIRS);
    for cmd in ["cluster", "cluster-pointwise"] {
        let out = run(&[cmd, "--input", &pts, "--r", "2", "--power", "2", "--report-cost"]);
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        assert!(v["cost_report"]["rounds"].as_u64().unwrap() > 0);
        let sol = write(dir.path(), "sol.json", std::str::from_utf8(&out.stdout).unwrap());
        let check = run(&["verify", "--input", &pts, "--solution", &sol, "--r", "2"]);
        assert_eq!(check.status.code(), Some(0), "{}", String::from_utf8_lossy(&check.stdout));
        let strict = run(&["verify", "--input", &pts, "--solution", &sol, "--r", "3"]);
        assert_eq!(strict.status.code(), Some(1));
    }
}

#[test]
fn outliers_and_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "pts.csv", "dim=1\n0,0\n1,1\n10,10\n11,11\n50,50\n");
    let out = run(&["cluster-outliers", "--input", &pts, "--r", "2", "--outliers", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["outliers"], serde_json::json!([50]));
    let too_big = run(&["cluster", "--input", &pts, "--r", "9"]);
    assert_eq!(too_big.status.code(), Some(1));
}

#[test]
fn usage_and_io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    assert_eq!(run(&["cluster", "--input", &empty, "--r", "2"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.csv", "dim=1\n0,0\n1,oops\n");
    let out = run(&["cluster", "--input", &bad, "--r", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let pts = write(dir.path(), "pts.csv", PAIRS);
    assert_eq!(run(&["cluster", "--input", &pts, "--r", "2", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["cluster", "--input", "/nonexistent/x.csv", "--r", "2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn gen_is_deterministic() {
    let args = ["gen", "--kind", "gaussian-blobs", "--n", "100", "--d", "2", "--blobs", "5", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with(b"dim=2\n"));
}

#[test]
fn replay_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let ops = write(dir.path(), "trace.log", "I 0 0\nI 1 1\nI 10 10\nI 11 11\nQ 0\nQALL\n");
    let out = run(&["dynamic-replay", "--ops", &ops, "--r", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["clusters"].as_array().unwrap().len(), 2);
    let sol = write(dir.path(), "sol.json", std::str::from_utf8(&out.stdout).unwrap());
    let pts = write(dir.path(), "pts.csv", PAIRS);
    assert_eq!(
        run(&["verify", "--input", &pts, "--solution", &sol, "--r", "2"]).status.code(),
        Some(0)
    );
    let broken = write(dir.path(), "broken.log", "I 0 0\nD 4\n");
    assert_eq!(run(&["dynamic-replay", "--ops", &broken, "--r", "2"]).status.code(), Some(2));
}

#[test]
fn graph_export_has_header() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(dir.path(), "pts.csv", PAIRS);
    let edges = dir.path().join("g.txt");
    let out = run(&["cluster", "--input", &pts, "--r", "2", "--export-graph", edges.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&edges).unwrap();
    assert!(text.starts_with("# R=1 r=2 C=1 mode=exact seed=0\n"));
    assert_eq!(text.lines().count(), 3);

    let out = run(&[
        "cluster", "--input", &pts, "--r", "2", "--mode", "lsh-sparse", "--export-graph", edges.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&edges).unwrap();
    assert!(text.starts_with("# R=") && text.lines().next().unwrap().contains(" r=2 C=2 mode=lsh_sparse "));
}
