use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_origami-schottky");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("ORIGAMI_SCHOTTKY_OUT_DIR")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn build_then_verify_from_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.json");
    let o = run(&["build", "--case", "a", "--n", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["config"]["n"], 3);
    assert_eq!(v["group"]["certificate"]["verdict"], true);

    let o = run(&[
        "verify",
        "--from",
        out.to_str().unwrap(),
        "--subgroup",
        "odd",
        "--depth",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["index"], 6);
    assert_eq!(v["report"]["normal"], true);
    assert_eq!(v["report"]["genus"], 3);
    assert_eq!(v["passed"], true);
}

#[test]
fn verify_even_subgroup_reports_core() {
    let o = run(&[
        "verify",
        "--case",
        "a",
        "--n",
        "4",
        "--subgroup",
        "even",
        "--depth",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["index"], 8);
    assert_eq!(v["report"]["normal"], false);
    assert!(v["report"]["quotient_tag"].is_null());
}

#[test]
fn verify_custom_words_and_coset_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cosets.csv");
    let o = run(&[
        "verify",
        "--case",
        "b",
        "--subgroup",
        "custom",
        "--words",
        "T; B T B; A B T B A^-1; A^-1 B T B A",
        "--depth",
        "2",
        "--coset-csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["index"], 12);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn verify_detects_torsion() {
    // ⟨B⟩ contains an elliptic element.
    let o = run(&[
        "verify",
        "--case",
        "a",
        "--n",
        "3",
        "--subgroup",
        "custom",
        "--words",
        "B",
        "--max-cosets",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn homs_counts() {
    let o = run(&["homs", "--case", "b", "--target", "A4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["surjective_torsion_free_count"].as_u64().unwrap() >= 1);
    assert_eq!(
        v["count"].as_u64().unwrap() as usize,
        v["homs"].as_array().unwrap().len()
    );

    // Hom(K, Z_m) has m·gcd(2, m) elements.
    for (m, expected) in [(3, 3), (4, 8), (6, 12)] {
        let o = run(&["homs", "--case", "a", "--n", "3", "--target", &format!("Z{m}")]);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["count"], expected, "Z{m}");
    }
}

#[test]
fn limitset_writes_csv_and_image() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    let pgm = dir.path().join("pts.pgm");
    let o = run(&[
        "limitset",
        "--case",
        "a",
        "--n",
        "3",
        "--depth",
        "3",
        "--csv",
        csv.to_str().unwrap(),
        "--ppm",
        pgm.to_str().unwrap(),
        "--width",
        "64",
        "--height",
        "32",
        "--check-containment",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["points_outside_discs"], 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("re,im,depth"));
    assert_eq!(text.lines().count() as u64, 1 + v["point_count"].as_u64().unwrap());
    let img = std::fs::read(&pgm).unwrap();
    let header = b"P5\n64 32\n255\n";
    assert!(img.starts_with(header));
    assert_eq!(img.len(), header.len() + 64 * 32);
}

#[test]
fn limitset_to_stdout_without_csv_path() {
    let o = run(&["limitset", "--case", "b", "--depth", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("re,im,depth\n"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["build", "--case", "b"])
        .env("ORIGAMI_SCHOTTKY_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v = json(&dir.path().join("build.json"));
    assert_eq!(v["orbit_circle_count"], 8);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["build", "--case", "a"],
        vec!["build", "--case", "b", "--n", "3"],
        vec!["build", "--case", "a", "--n", "1"],
        vec!["build", "--case", "a", "--n", "3", "--r", "1.5"],
        vec!["build", "--case", "a", "--n", "3", "--lambda", "0"],
        vec!["limitset", "--case", "a", "--n", "3", "--depth", "9"],
        vec!["limitset", "--case", "a", "--n", "3", "--depth", "0"],
        vec!["homs", "--case", "a", "--n", "3", "--target", "Q8"],
        vec!["verify", "--case", "a", "--n", "3", "--subgroup", "a4"],
        vec!["verify", "--case", "a", "--n", "3", "--subgroup", "custom"],
        vec![
            "verify",
            "--case",
            "a",
            "--n",
            "3",
            "--subgroup",
            "custom",
            "--words",
            "X",
        ],
        vec!["frobnicate"],
        vec![],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn rejects_tampered_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.json");
    assert_eq!(
        run(&["build", "--case", "a", "--n", "2", "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let mut v = json(&out);
    v["extra"] = Value::Bool(true);
    std::fs::write(&out, v.to_string()).unwrap();
    let o = run(&["verify", "--from", out.to_str().unwrap(), "--subgroup", "even"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "verify",
        "--from",
        out.to_str().unwrap(),
        "--case",
        "a",
        "--subgroup",
        "even",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn in_process_runner_matches_binary() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = origami_schottky::cli::run(
        ["origami-schottky", "homs", "--case", "a", "--n", "2", "--target", "D4"],
        &mut out,
        &mut err,
    );
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["count"], 48);
}
