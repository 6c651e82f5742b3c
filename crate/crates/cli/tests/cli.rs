use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anchortalk"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("ANCHORTALK_OUT_DIR")
        .output()
        .unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gauss_reports_the_golden_slope() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gauss", "--sigma-theta", "1", "--beta", "1", "--sigma", "1", "--c", "1", "--d", "0.25"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(dir.path().join("gauss.json"));
    let alpha = doc["result"]["equilibrium"]["alpha"].as_f64().unwrap();
    assert!((alpha - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
    assert_eq!(doc["metadata"]["command"], "gauss");
    let csv = std::fs::read_to_string(dir.path().join("gauss_sweep.csv")).unwrap();
    assert!(csv.starts_with("# anchortalk "));
    assert!(csv.lines().any(|l| l.starts_with("alpha,")));
}

#[test]
fn flags_override_the_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = models().join("gauss_default.json");
    let o = run(dir.path(), &["gauss", "--model", model.to_str().unwrap(), "--c", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let from_file = read_json(dir.path().join("gauss.json"))["result"]["equilibrium"]["alpha"].as_f64().unwrap();
    let o = run(dir.path(), &["gauss", "--sigma-theta", "1", "--beta", "1", "--sigma", "1", "--c", "2", "--d", "0.25"]);
    assert!(o.status.success());
    let from_flags = read_json(dir.path().join("gauss.json"))["result"]["equilibrium"]["alpha"].as_f64().unwrap();
    assert_eq!(from_file, from_flags);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = run(dir.path(), &["gauss", "--sigma-theta", "1", "--beta", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad = run(dir.path(), &["gauss", "--sigma-theta", "1", "--beta", "1", "--sigma", "-1", "--c", "1", "--d", "0"]);
    assert_eq!(bad.status.code(), Some(2));
    let model = models().join("gauss_default.json");
    let unknown = run(dir.path(), &["solve", "--model", model.to_str().unwrap(), "--set", "cost.k=1"]);
    assert_eq!(unknown.status.code(), Some(2));
    let absent = run(dir.path(), &["solve", "--model", "/nonexistent/model.json"]);
    assert_eq!(absent.status.code(), Some(2));
}

#[test]
fn verify_passes_on_the_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let model = models().join("gauss_default.json");
    let o = run(dir.path(), &["verify", "--model", model.to_str().unwrap(), "--seed", "7", "--samples", "200000"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = read_json(dir.path().join("verify_diagnostics.json"));
    assert_eq!(doc["metadata"]["seed"], 7);
    assert_eq!(doc["result"]["diagnostics"]["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn infeasible_message_bounds_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let model = models().join("compact_case.json");
    let o = run(
        dir.path(),
        &["solve", "--model", model.to_str().unwrap(), "--set", "message_space.lo=-0.2", "--set", "message_space.hi=0.2"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NoRegularEquilibrium"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let model = models().join("uninf_gauss.json");
    let gauss_model = models().join("gauss_default.json");
    for dir in [a.path(), b.path()] {
        assert!(run(dir, &["sturm", "--model", model.to_str().unwrap()]).status.success());
        let v = run(dir, &["verify", "--model", gauss_model.to_str().unwrap(), "--seed", "3", "--samples", "100000"]);
        assert!(v.status.success());
        assert!(run(dir, &["figure", "pareto"]).status.success());
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 7, "{names:?}");
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_anchortalk"))
        .args(["figure", "pareto"])
        .env("ANCHORTALK_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("pareto_frontier.csv").exists());
}
