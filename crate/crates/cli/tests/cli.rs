use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempred_core::synth::{generate_history, HistorySpec};

fn tempred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempred"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tempred(args);
    assert!(
        out.status.success(),
        "tempred {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn bundle(seed: u64) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let spec = HistorySpec {
        seed,
        commit_count: 20,
        ..HistorySpec::default()
    };
    generate_history(&spec, dir.path()).unwrap();
    dir
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn empty_bundle_reports_null_redundancy() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("manifest.json"), r#"{"commits": []}"#).unwrap();
    let json: Value = serde_json::from_str(&ok(&["analyze", "--bundle", "--source", s(dir.path())])).unwrap();
    assert_eq!(json["diagnostics"]["commits_total"], 0);
    for metric in json["metrics"].as_array().unwrap() {
        assert!(metric["temporal_redundancy"].is_null());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = bundle(1);
    let args = ["analyze", "--bundle", "--source", s(dir.path()), "--trace-commits"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn csv_rows_cover_projects_granularities_scopes() {
    let a = bundle(2);
    let b = bundle(3);
    let csv = ok(&[
        "analyze", "--bundle", "--source", s(a.path()), "--source", s(b.path()), "--format", "csv",
    ]);
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
    let csv = ok(&[
        "analyze", "--bundle", "--source", s(a.path()), "--format", "csv", "--granularity", "token", "--scope",
        "local,global",
    ]);
    assert_eq!(csv.lines().count(), 1 + 2);
}

#[test]
fn multiple_sources_give_a_json_array_in_order() {
    let a = bundle(4);
    let b = bundle(5);
    let out = ok(&[
        "analyze", "--bundle", "--source", s(a.path()), "--source", s(b.path()), "--name", "alpha", "--name",
        "beta",
    ]);
    let json: Value = serde_json::from_str(&out).unwrap();
    let names: Vec<&str> = json.as_array().unwrap().iter().map(|r| r["project"].as_str().unwrap()).collect();
    assert_eq!(names, ["alpha", "beta"]);
}

#[test]
fn table_output_and_out_file() {
    let dir = bundle(6);
    let out = tempfile::tempdir().unwrap();
    let file = out.path().join("report.txt");
    ok(&["analyze", "--bundle", "--source", s(dir.path()), "--format", "table", "--name", "synth", "--out", s(&file)]);
    let table = std::fs::read_to_string(&file).unwrap();
    let header = table.lines().next().unwrap();
    assert!(header.starts_with("Program"));
    assert!(header.contains("Token Global TR"));
    let row = table.lines().nth(2).unwrap();
    assert!(row.starts_with("synth"));
    assert!(row.contains('%'));
}

#[test]
fn oracle_agrees_with_analyze() {
    let dir = bundle(7);
    let analyzed: Value = serde_json::from_str(&ok(&["analyze", "--bundle", "--source", s(dir.path())])).unwrap();
    let oracle: Value = serde_json::from_str(&ok(&["oracle", "--bundle", s(dir.path())])).unwrap();
    assert_eq!(analyzed["metrics"], oracle["metrics"]);
    assert_eq!(analyzed["acceptable_commits"], oracle["acceptable_commits"]);
}

#[test]
fn errors_exit_non_zero() {
    let missing = tempred(&["analyze", "--bundle", "--source", "/definitely/not/here"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("error"));

    let usage = tempred(&["analyze", "--source", ".", "--scope", "galactic"]);
    assert_eq!(usage.status.code(), Some(2));

    let dir = bundle(8);
    let names = tempred(&["analyze", "--bundle", "--source", s(dir.path()), "--name", "a", "--name", "b"]);
    assert_eq!(names.status.code(), Some(1));

    let glob = tempred(&["analyze", "--bundle", "--source", s(dir.path()), "--include", "src/[x"]);
    assert_eq!(glob.status.code(), Some(1));
}

fn git(dir: &Path, args: &[&str]) {
    let status = Command::new("git")
        .args(args)
        .current_dir(dir)
        .env("GIT_AUTHOR_DATE", "@1600000000 +0000")
        .env("GIT_COMMITTER_DATE", "@1600000000 +0000")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .status()
        .unwrap();
    assert!(status.success(), "git {args:?}");
}

#[test]
fn export_then_analyze_matches_direct_run() {
    let repo = tempfile::tempdir().unwrap();
    let r = repo.path();
    git(r, &["init", "-q", "-b", "main"]);
    git(r, &["config", "user.name", "T"]);
    git(r, &["config", "user.email", "t@example.com"]);
    let contents = ["int a;\n", "int a;\nint b;\n", "int b;\nint a;\n", "int b;\nint a;\nint b;\n"];
    for (i, text) in contents.iter().enumerate() {
        std::fs::create_dir_all(r.join("src")).unwrap();
        std::fs::write(r.join("src/A.java"), text).unwrap();
        std::fs::write(r.join("README.md"), format!("v{i}\n")).unwrap();
        git(r, &["add", "-A"]);
        git(r, &["commit", "-q", "-m", &format!("c{i}")]);
    }

    let out = tempfile::tempdir().unwrap();
    ok(&["export-bundle", "--source", s(r), "--out", s(out.path()), "--branch", "main"]);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    let commits = manifest["commits"].as_array().unwrap();
    assert_eq!(commits.len(), 4);
    // README.md is outside the default include rules
    assert!(commits.iter().all(|c| c["files"].as_array().unwrap().len() == 1));

    let direct: Value =
        serde_json::from_str(&ok(&["analyze", "--source", s(r), "--branch", "main", "--name", "p"])).unwrap();
    let via_bundle: Value =
        serde_json::from_str(&ok(&["analyze", "--bundle", "--source", s(out.path()), "--name", "p"])).unwrap();
    assert_eq!(direct["metrics"], via_bundle["metrics"]);
    assert_eq!(direct["acceptable_commits"]["line"], 4);
    // the third and fourth commits only re-add lines
    let line_global = &direct["metrics"][0];
    assert_eq!(line_global["redundant_commits"], 2);
}
