use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cspprune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cspprune")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn gen(dir: &TempDir, name: &str, params: &[&str]) -> PathBuf {
    let path = dir.path().join(format!("{name}{}.bcsp", params.join("_")));
    let mut args = vec!["gen", name];
    args.extend_from_slice(params);
    args.extend_from_slice(&["-o", path.to_str().unwrap()]);
    let out = cspprune(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn k4_preprocess_reports_three_value_eliminations() {
    let dir = TempDir::new().unwrap();
    let k4 = gen(&dir, "K4_COLOUR", &[]);
    let trace = dir.path().join("k4.trace");
    let out = cspprune(&["preprocess", p(&k4), "--rules", "Exists2Snake", "--trace", p(&trace)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("val-elim: 3 (∃2snake 3)"), "{text}");
    assert!(text.contains("ac: 3"), "{text}");
    assert!(text.contains("final domains: singleton"), "{text}");
    let trace = std::fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("bcsp-trace 1 "));
    assert_eq!(trace.lines().filter(|l| l.starts_with("val ")).count(), 3);
}

#[test]
fn k3_solve_with_preprocessing_is_unsatisfiable() {
    let dir = TempDir::new().unwrap();
    let k3 = gen(&dir, "K3_2COL", &[]);
    let out = cspprune(&["solve", p(&k3), "--preprocess"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("unsatisfiable"));
    assert_eq!(cspprune(&["count", p(&k3)]).status.code(), Some(1));
}

#[test]
fn star_centre_has_no_snake() {
    let dir = TempDir::new().unwrap();
    let star = gen(&dir, "STAR", &["4"]);
    let out = cspprune(&["check", p(&star), "--pattern", "∃snake", "--at", "0", "--map", "a=0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "no occurrence");
    let out = cspprune(&["check", p(&star), "--pattern", "BTP"]);
    assert!(stdout(&out).starts_with("occurrence"));
    let out = cspprune(&["count", p(&star)]);
    assert_eq!(stdout(&out).trim(), "solutions: 2");
}

#[test]
fn reconstructed_solutions_validate() {
    let dir = TempDir::new().unwrap();
    for (name, params) in [("K4_COLOUR", vec![]), ("BOOL3", vec![]), ("STAR", vec!["7"]), ("IJ", vec![])] {
        let path = gen(&dir, name, &params);
        let out = cspprune(&["solve", p(&path), "--preprocess", "--reconstruct"]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert!(stdout(&out).contains("valid: true"), "{name}: {}", stdout(&out));
    }
    let random = gen(&dir, "random", &["6", "3", "0.6", "0.3", "11"]);
    let out = cspprune(&["solve", p(&random), "--preprocess", "--reconstruct", "--values-first"]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    if out.status.code() == Some(0) {
        assert!(stdout(&out).contains("valid: true"));
    }
}

#[test]
fn explicit_order_follows_the_script() {
    let dir = TempDir::new().unwrap();
    let nc = gen(&dir, "NONCONF", &[]);
    let out = cspprune(&["preprocess", p(&nc), "--no-var", "--order", "explicit:val 2 0 Exists2Snake a=2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("val-elim: 1 (∃2snake 1)"), "{}", stdout(&out));
}

#[test]
fn verify_passes_on_fixtures_and_files() {
    let dir = TempDir::new().unwrap();
    let tree = gen(&dir, "tree", &["8", "3", "0.3", "5"]);
    let out = cspprune(&["verify", "--all-fixtures", p(&tree)]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("0 disagreement(s)"));
}

#[test]
fn reduced_instance_is_written() {
    let dir = TempDir::new().unwrap();
    let bool3 = gen(&dir, "BOOL3", &[]);
    let reduced = dir.path().join("reduced.bcsp");
    let out = cspprune(&["preprocess", p(&bool3), "--no-var", "-o", p(&reduced)]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&reduced).unwrap();
    assert!(text.starts_with("bcsp 1"));
    assert_eq!(cspprune(&["count", p(&reduced)]).status.code(), Some(0));
}

#[test]
fn usage_and_io_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cspprune(&["count", "/nonexistent/file.bcsp"]).status.code(), Some(2));
    assert_eq!(cspprune(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cspprune(&["gen", "NOPE"]).status.code(), Some(2));
    let bad = dir.path().join("bad.bcsp");
    std::fs::write(&bad, "bcsp 1\nvars 2\ndom 0 : x\n").unwrap();
    let out = cspprune(&["count", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let k3 = gen(&dir, "K3_2COL", &[]);
    assert_eq!(cspprune(&["preprocess", p(&k3), "--rules", "Bogus"]).status.code(), Some(2));
    assert_eq!(cspprune(&["preprocess", p(&k3), "--order", "sideways"]).status.code(), Some(2));
}
