//! Exit-code contract of the `dichotomy-kit` binary: 0 success, 1 usage or
//! parse error, 2 negative mathematical result.

use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dichotomy-kit")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn analyze_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (diag, id, report) = (path(dir.path(), "diag.json"), path(dir.path(), "id.json"), path(dir.path(), "r.json"));
    assert_eq!(run(&["generate", "--kind", "diagonal", "--entries", "0.5,2", "--window", "32", "--out", &diag]).0, 0);
    assert_eq!(run(&["generate", "--kind", "identity", "--dim", "2", "--window", "32", "--out", &id]).0, 0);
    assert_eq!(run(&["analyze", "--input", &diag, "--report", &report]).0, 0);
    assert!(std::fs::metadata(&report).unwrap().len() > 0);
    assert_eq!(run(&["analyze", "--input", &id, "--report", &report]).0, 2);
    assert_eq!(run(&["analyze", "--input", &diag, "--space", "lp:0.5", "--report", &report]).0, 1);
}

#[test]
fn malformed_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, "{\"dim\": 2,\n \"window\": [0, 3],\n \"maps\": [oops]}\n").unwrap();
    let (code, stderr) = run(&["analyze", "--input", &bad, "--report", &path(dir.path(), "r.json")]);
    assert_eq!(code, 1);
    assert!(stderr.contains("line 3"), "{stderr}");
    assert_eq!(run(&["analyze", "--input", &path(dir.path(), "missing.json")]).0, 1);
    assert_eq!(run(&["transmogrify"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (cat, id, report) = (path(dir.path(), "cat.json"), path(dir.path(), "id.json"), path(dir.path(), "r.json"));
    assert_eq!(run(&["generate", "--kind", "catmap", "--orbit", "--window", "64", "--out", &cat]).0, 0);
    assert_eq!(run(&["certify", "--orbit", &cat, "--epsilon", "0.05", "--report", &report]).0, 0);
    let (code, stderr) = run(&["certify", "--orbit", &cat, "--epsilon", "1.0", "--report", &report]);
    assert_eq!(code, 1, "{stderr}");
    assert_eq!(run(&["generate", "--kind", "identity", "--dim", "2", "--orbit", "--window", "48", "--out", &id]).0, 0);
    assert_eq!(run(&["certify", "--orbit", &id, "--epsilon", "0.05", "--report", &report]).0, 2);
}
