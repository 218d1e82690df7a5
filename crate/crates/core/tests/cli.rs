use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn epsconv(args: &[&str], files: &[PathBuf], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epsconv"))
        .args(args)
        .args(files)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn csv_is_byte_identical_without_timing() {
    let files = [fixture("abs_value_branches.json"), fixture("shifted_disc_polar.json")];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = epsconv(&["run", "--no-timing"], &files, d.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = std::fs::read_to_string(a.path().join("report.csv")).unwrap();
    let second = std::fs::read_to_string(b.path().join("report.csv")).unwrap();
    assert_eq!(first, second);
    let mut lines = first.lines();
    assert_eq!(lines.next(), Some("scenario,operation,pass,hausdorff_error,flags,millis"));
    assert!(lines.next().unwrap().starts_with("abs_value_branches,subdiff,true,"));
    assert!(lines.next().unwrap().starts_with("shifted_disc_polar,polar,true,"));
}

#[test]
fn svg_output_draws_two_dimensional_sets() {
    let dir = tempfile::tempdir().unwrap();
    let out = epsconv(&["run", "--format", "svg"], &[fixture("shifted_disc_polar.json")], dir.path());
    assert!(out.status.success());
    let svgs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "svg"))
        .collect();
    assert!(!svgs.is_empty());
    assert!(!dir.path().join("report.csv").exists());
    let text = std::fs::read_to_string(&svgs[0]).unwrap();
    assert!(text.starts_with("<svg") && text.contains("<line"));
}

#[test]
fn unreadable_scenario_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, r#"{"name": "broken", "operation": "no-such-thing"}"#).unwrap();
    let out = epsconv(&["run"], &[bad, fixture("abs_value_branches.json")], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("broken,") && l.contains(",false,")));
    assert!(csv.lines().any(|l| l.starts_with("abs_value_branches,") && l.contains(",true,")));
}

#[test]
fn failed_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let wrong = dir.path().join("wrong.json");
    std::fs::write(
        &wrong,
        r#"{"name": "wrong", "operation": "subdiff", "f": {"type": "abs_norm", "weights": [1.0]}, "x_bar": [0.0],
            "cases": [{"eps": 0.0, "expected": {"kind": "interval", "lo": -2.0, "hi": 2.0}}]}"#,
    )
    .unwrap();
    let out = epsconv(&["run"], &[wrong], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_tolerances_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = epsconv(&["run", "--set-tol", "-1"], &[fixture("abs_value_branches.json")], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = epsconv(&["run", "--eta-ladder", "0.1,0.5"], &[fixture("abs_value_branches.json")], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
