use std::path::Path;
use std::process::{Command, Output};

fn clinsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clinsum"))
        .args(args)
        .output()
        .unwrap()
}

fn notes() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/synthetic_notes.jsonl")
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(clinsum(&[]).status.code(), Some(2));
    assert_eq!(
        clinsum(&[
            "cutoff",
            "--merged",
            "m",
            "--section",
            "chief_complaint",
            "--out",
            "o"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        clinsum(&[
            "evaluate",
            "--dataset",
            "d",
            "--systems",
            "s",
            "--out",
            "o",
            "--beta",
            "x"
        ])
        .status
        .code(),
        Some(2)
    );
    let bad_ratios = clinsum(&[
        "build-dataset",
        "--notes",
        &notes(),
        "--out",
        "unused",
        "--ratios",
        "0.5,0.1,0.1",
    ]);
    assert_eq!(bad_ratios.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    let missing = clinsum(&[
        "build-dataset",
        "--notes",
        "/nonexistent/notes.jsonl",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));
}

#[test]
fn evaluate_without_systems_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    assert!(clinsum(&[
        "build-dataset",
        "--notes",
        &notes(),
        "--out",
        ds.to_str().unwrap(),
        "--quiet"
    ])
    .status
    .success());
    let glob = tmp.path().join("none*.jsonl");
    let out = clinsum(&[
        "evaluate",
        "--dataset",
        ds.to_str().unwrap(),
        "--systems",
        glob.to_str().unwrap(),
        "--gazetteer",
        "x",
        "--out",
        tmp.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn build_writes_every_section_file() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    assert!(clinsum(&[
        "build-dataset",
        "--notes",
        &notes(),
        "--out",
        ds.to_str().unwrap(),
        "--quiet"
    ])
    .status
    .success());
    for split in ["train", "validation", "test"] {
        let n = std::fs::read_dir(ds.join("sections").join(split))
            .unwrap()
            .count();
        assert_eq!(n, 7, "{split}");
    }
    for f in [
        "encounters.jsonl",
        "splits.jsonl",
        "header_rules.json",
        "build_report.json",
        "corpus_stats.json",
        "corpus_stats.csv",
    ] {
        assert!(ds.join(f).is_file(), "{f}");
    }
}
