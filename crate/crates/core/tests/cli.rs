use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gram-spectra")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn graph_of_fermat() {
    let out = run(&["graph", path(&data("fermat.toml"))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"edge_count\": 12"), "{text}");
    assert_eq!(text.matches("\"rank\": 4").count(), 3);
}

#[test]
fn zero_form_is_not_smooth() {
    let out = run(&["analyze", path(&data("zero.toml"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("fermat.toml")).unwrap().replace("\"211\" = 0.0\n", "");
    let file = dir.path().join("broken.toml");
    std::fs::write(&file, text).unwrap();
    let out = run(&["bitangents", path(&file)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"211\""));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "/nonexistent/input.toml"]).status.code(), Some(1));
}

#[test]
fn sampling_rejects_non_sos_forms() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(data("fermat.toml")).unwrap().replace(" = 1.0", " = -1.0");
    let file = dir.path().join("neg.toml");
    std::fs::write(&file, text).unwrap();
    assert_eq!(run(&["sample", path(&file), "--n", "3"]).status.code(), Some(2));
}

#[test]
fn sample_histogram() {
    let out = run(&["sample", path(&data("fermat.toml")), "--n", "8", "--seed", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"requested\": 8"));
    assert!(text.contains("\"failures\": []"));
}

#[test]
fn slice_tables_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
    for p in [&a, &b] {
        let out = run(&["slice", path(&data("fermat.toml")), "--grid", "2", "--out", path(p)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 8);
    assert_eq!(&rows[0][..3], &[0.0, 0.0, 0.0]);
    assert!(rows[0][3].abs() <= 1e-10);

    let out = run(&["slice", path(&data("fermat.toml")), "--grid", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("5.0000000000000000e-1\t5.0000000000000000e-1"));
}

#[test]
fn tolerance_flags_are_reported() {
    let out = run(&["analyze", path(&data("fermat.toml")), "--tol-rank", "1e-8", "--seed", "9"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"rank\": 1.0000000000000000e-8"));
    assert!(text.contains("\"seed\": 9"));
}
