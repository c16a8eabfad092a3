use std::path::Path;
use std::process::{Command, Output};

use covert_cli::{BOUNDS_HEADER, SIMULATE_HEADER};

fn covert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_covert"))
        .args(args)
        .output()
        .expect("spawn covert")
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn bounds_to(out: &Path, deltas: &str, min: &str, max: &str, step: &str) -> Output {
    covert(&[
        "bounds",
        "--delta",
        deltas,
        "--eps-min",
        min,
        "--eps-max",
        max,
        "--eps-step",
        step,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn bounds_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = bounds_to(&out, "0.1,0.01", "0.1", "0.9", "0.1");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), golden("bounds_coarse.csv"));
}

#[test]
fn bounds_full_grid_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert_eq!(bounds_to(p, "0.1,0.01", "0.01", "0.99", "0.01").status.code(), Some(0));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(BOUNDS_HEADER));
    assert_eq!(lines.count(), 198);
}

#[test]
fn bounds_rejects_bad_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = bounds_to(&dir.path().join("x.csv"), "0.1", "0.9", "0.1", "0.1");
    assert_eq!(o.status.code(), Some(2));
    let o = bounds_to(&dir.path().join("x.csv"), "1.5", "0.1", "0.9", "0.1");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_failure_names_the_path() {
    let o = bounds_to(Path::new("/nonexistent-dir/x.csv"), "0.1", "0.1", "0.9", "0.1");
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/x.csv"));
}

#[test]
fn missing_flag_is_usage_error() {
    assert_eq!(covert(&["bounds", "--delta", "0.1"]).status.code(), Some(2));
    assert_eq!(covert(&["frobnicate"]).status.code(), Some(2));
}

fn simulate_small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "simulate",
        "--n",
        "128",
        "--epsilon",
        "0.6",
        "--delta",
        "0.1",
        "--messages",
        "8",
        "--keys",
        "2",
        "--trials",
        "2000",
        "--samples",
        "2000",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    covert(&args)
}

#[test]
fn simulate_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = simulate_small(&out, &[]);
    // the covertness budget is far out of reach at this size
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("reliability PASS"));
    assert!(stdout.contains("covertness FAIL"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(SIMULATE_HEADER));
    assert_eq!(text, golden("simulate_small.csv"));
}

#[test]
fn simulate_threshold_decoder_reports_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    simulate_small(&out, &["--decoder", "threshold"]);
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().find(|l| l.starts_with("threshold,")).unwrap();
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!(value > 8f64.ln());
}

#[test]
fn simulate_single_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m1.csv");
    let o = covert(&[
        "simulate",
        "--n",
        "1024",
        "--epsilon",
        "0.5",
        "--delta",
        "0.05",
        "--messages",
        "1",
        "--trials",
        "500",
        "--samples",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 1)));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\nzero_messages,0,,\n"));
    assert!(text.contains("\nerror_augmented,0,0,500\n"));
}

#[test]
fn simulate_enforces_caps_and_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    let cases: [&[&str]; 4] = [
        &[
            "--n",
            "100000",
            "--epsilon",
            "0.5",
            "--delta",
            "0.05",
            "--messages",
            "2",
        ],
        &[
            "--n",
            "1024",
            "--epsilon",
            "0.5",
            "--delta",
            "0.05",
            "--messages",
            "600000",
            "--keys",
            "2",
        ],
        &["--n", "64", "--epsilon", "0.4", "--delta", "0.05", "--messages", "2"],
        &["--n", "1024", "--epsilon", "0.5", "--delta", "0.05"],
    ];
    for case in cases {
        let mut args = vec!["simulate", "--out", out];
        args.extend_from_slice(case);
        let o = covert(&args);
        assert_eq!(o.status.code(), Some(2), "{case:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn validate_passes_and_counts() {
    let o = covert(&["validate", "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let runs = covert_core::checks::check_names().count();
    assert!(stdout.contains(&format!("checks run: {runs}, passed: {runs}, failed: 0")));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), runs);
}

#[test]
fn validate_self_test_fails_loudly() {
    let o = covert(&["validate", "--self-test-fail"]);
    assert_ne!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL cumulant_consistency"));
    assert!(stdout.contains("failed: 1"));
}
