//! Command-line behaviour: exit codes, output directory resolution and subcommands.

use std::path::Path;
use std::process::{Command, Output};

use heatframe::corpus;

fn heatframe(cwd: &Path, args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_heatframe"));
    cmd.current_dir(cwd).args(args).env_remove("HEATFRAME_OUT");
    if let Some(dir) = env_out {
        cmd.env("HEATFRAME_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn statement(dir: &Path, name: &str, src: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, src).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn solve_writes_report_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let file = statement(dir.path(), "wall-1d.txt", corpus::WALL_1D);
    let out = dir.path().join("out");
    let o = heatframe(dir.path(), &["solve", &file, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout_json(&o);
    assert_eq!(report["status"], "ok");
    assert_eq!(report["problem"], "wall-1d.txt");
    for f in report["figures"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).is_file());
    }
    assert_eq!(std::fs::read(out.join("report.json")).unwrap(), o.stdout);
}

#[test]
fn output_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = statement(dir.path(), "spoon.txt", corpus::SPOON);
    let (env_dir, flag_dir) = (dir.path().join("env"), dir.path().join("flag"));
    let o = heatframe(dir.path(), &["solve", &file], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(env_dir.join("report.json").is_file());
    let o = heatframe(dir.path(), &["solve", &file, "--out", flag_dir.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("report.json").is_file());
    let o = heatframe(dir.path(), &["solve", &file], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("heatframe-out/report.json").is_file());
}

#[test]
fn json_only_writes_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let file = statement(dir.path(), "wall-3d.txt", corpus::WALL_3D);
    let o = heatframe(dir.path(), &["solve", &file, "--json-only"], None);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout_json(&o);
    assert_eq!(report["figures"], serde_json::json!([]));
    assert_eq!(report["problem_class"], "generalized_wall");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn defective_statement_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = statement(dir.path(), "bad.txt", &corpus::WALL_1D.replace("$k_p= 0.1$, ", ""));
    let o = heatframe(dir.path(), &["solve", &file, "--json-only"], None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout_json(&o)["status"], "error");
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("MissingBinding (sentence"), "{stderr}");
}

#[test]
fn exhausted_budget_exits_partial() {
    let dir = tempfile::tempdir().unwrap();
    let file = statement(dir.path(), "wall-3d.txt", corpus::WALL_3D);
    let o = heatframe(dir.path(), &["solve", &file, "--fe", "--max-dofs", "50", "--json-only"], None);
    assert_eq!(o.status.code(), Some(3));
    let report = stdout_json(&o);
    assert_eq!(report["status"], "partial");
    assert_eq!(report["fe"]["converged"], false);
}

#[test]
fn missing_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = heatframe(dir.path(), &["solve", "no-such-file.txt"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn parse_prints_frame_and_template() {
    let dir = tempfile::tempdir().unwrap();
    let file = statement(dir.path(), "spoon.txt", corpus::SPOON);
    let o = heatframe(dir.path(), &["parse", &file], None);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["frame"]["components"].as_array().unwrap().len(), 2);
    assert!(v["template"].is_object());
}
