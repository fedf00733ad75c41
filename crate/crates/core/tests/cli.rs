use std::path::Path;
use std::process::{Command, Output};

fn ssmlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssmlab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn list_names_every_scenario() {
    let o = ssmlab(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in [
        "lens-compensation",
        "waist-curve",
        "step-pi",
        "ssm-lens",
        "decoherence-gamma",
        "split-readout",
        "mc-oracle",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from:\n{text}");
    }
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn preset_is_a_valid_config() {
    let o = ssmlab(&["preset", "step-pi"]);
    assert!(o.status.success());
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "step.json", &stdout(&o));
    let v = ssmlab(&["validate", &path]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
    assert!(stdout(&v).contains("ok"));
}

#[test]
fn validate_names_bad_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(
        tmp.path(),
        "bad.json",
        r#"{"scenario": "step-pi", "grid": {"pitch_um": -3.25}, "camera": {"bit_depth": 20}}"#,
    );
    let o = ssmlab(&["validate", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("seed"), "{err}");
    assert!(err.contains("grid.pitch_um"), "{err}");
    assert!(err.contains("camera"), "{err}");
}

#[test]
fn run_writes_report_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mc");
    let o = ssmlab(&[
        "run",
        "mc-oracle",
        "--set",
        "params.mc.n_samples=20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS z_score_1"));
    for f in ["report.json", "config.json", "timing.json", "mc_oracle.csv"] {
        assert!(out.join(f).exists(), "{f} not written");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report.get("wall_clock_s").is_none());
}

#[test]
fn threshold_failure_exits_one() {
    // A far too weak SSM lens leaves most of the aberration in place.
    let o = ssmlab(&["run", "lens-compensation", "--set", "params.lens_compensation.ssm_focal_mm=1000"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL aberration_removed"));
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let no_seed = write(tmp.path(), "no_seed.json", r#"{"n_frames": 5}"#);
    let o = ssmlab(&["run", "step-pi", "--config", &no_seed]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));

    let o = ssmlab(&["run", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown scenario"));

    let o = ssmlab(&["run", "mc-oracle", "--set", "grid.pitch_um"]);
    assert_eq!(o.status.code(), Some(2));

    let wrong = write(tmp.path(), "wrong.json", r#"{"scenario": "step-pi", "seed": 1}"#);
    let o = ssmlab(&["run", "mc-oracle", "--config", &wrong]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_same_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"seed": 77, "params": {"mc": {"n_samples": 10000}}}"#);
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = ssmlab(&["run", "mc-oracle", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        reports.push(std::fs::read(out.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}
