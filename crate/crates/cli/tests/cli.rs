use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn lagfib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagfib"))
        .args(args)
        .env_remove("LAGFIB_JOBS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn unknown_names_exit_with_usage_errors() {
    let o = lagfib(&["--model", "moebius"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("moebius"));
    assert_eq!(code(&lagfib(&["--suite", "tropical"])), 2);
    assert_eq!(code(&lagfib(&["--samples", "0"])), 2);
    assert_eq!(code(&lagfib(&["--tol", "1e-12,-1"])), 2);
    assert_eq!(code(&lagfib(&["--region", "1:0"])), 2);
}

#[test]
fn json_report_and_artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = lagfib(&[
        "--model",
        "harvey_lawson",
        "--suite",
        "lagrangian,amoeba,monodromy",
        "--samples",
        "30",
        "--format",
        "json",
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["schema"], "lagfib-report/1");
    assert_eq!(report["report"]["config"]["model"], "harvey_lawson");
    assert!(report["timings"]["total_ms"].as_f64().unwrap() > 0.0);
    let pgm = fs::read_to_string(out.join("amoeba.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n256 256\n255\n"));
    assert!(fs::read_to_string(out.join("amoeba_contour.csv"))
        .unwrap()
        .starts_with("polyline,x1,x2"));
    let m: Value =
        serde_json::from_str(&fs::read_to_string(out.join("monodromy.json")).unwrap()).unwrap();
    assert_eq!(m["entries"], serde_json::json!([[1, 0], [1, 1]]));
    // the table goes to stdout as well
    assert!(String::from_utf8_lossy(&o.stdout).contains("amoeba/unbounded_complement"));
}

#[test]
fn failing_checks_set_exit_status_one() {
    // a 64-cell raster cannot resolve the legs, so the complement count fails
    let o = lagfib(&["--model", "nodal", "--suite", "amoeba", "--grid", "64"]);
    assert_eq!(code(&o), 1);
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table
        .lines()
        .any(|l| l.starts_with("amoeba/unbounded_complement") && l.contains("fail")));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# smoke run\nmodel = nodal\nsuite = lagrangian\nsamples = 25\nseed = 7\nformat = json\n",
    )
    .unwrap();
    let o = lagfib(&[
        "--config",
        cfg.to_str().unwrap(),
        "--model",
        "positive_proper",
    ]);
    assert_eq!(code(&o), 0);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let config = &report["report"]["config"];
    assert_eq!(config["model"], "positive_proper");
    assert_eq!(config["samples"], 25);
    assert_eq!(config["seed"], 7);

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&lagfib(&["--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn reruns_give_identical_deterministic_sections() {
    let args = [
        "--model",
        "positive_proper",
        "--suite",
        "lagrangian,grading",
        "--samples",
        "30",
        "--format",
        "json",
    ];
    let a: Value = serde_json::from_slice(&lagfib(&args).stdout).unwrap();
    let b: Value = serde_json::from_slice(
        &Command::new(env!("CARGO_BIN_EXE_lagfib"))
            .args(args)
            .env("LAGFIB_JOBS", "3")
            .output()
            .unwrap()
            .stdout,
    )
    .unwrap();
    assert_eq!(
        serde_json::to_string(&a["report"]).unwrap(),
        serde_json::to_string(&b["report"]).unwrap()
    );
}
