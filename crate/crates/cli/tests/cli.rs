use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(format!("{name}.json"))
}

fn rjd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rjd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RJD_SEED")
        .output()
        .unwrap()
}

/// The single JSON artifact of a command in `dir`.
fn report(dir: &Path, command: &str) -> (PathBuf, Value) {
    let mut hits: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.starts_with(&format!("{command}-")) && name.ends_with(".json")
        })
        .collect();
    assert_eq!(hits.len(), 1, "{hits:?}");
    let p = hits.pop().unwrap();
    let v = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    (p, v)
}

#[test]
fn rate_on_unit_shift_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("unit-shift-jumps");
    let out = rjd(&["rate", "--model", m.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let (_, v) = report(dir.path(), "rate");
    assert_eq!(v["verdict"], "pass");
    let c = &v["certificate"];
    assert!((c["lambda_star"].as_f64().unwrap() - 0.442954).abs() < 1e-4);
    assert!((c["kappa"].as_f64().unwrap() - 0.230503).abs() < 1e-4);
    assert_eq!(c["method"], "exact_x_independent");
    assert_eq!(c["feasible_interval"][0], 0.0);
    assert!(c["warnings"].is_array());
}

#[test]
fn positive_drift_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("positive-drift");
    let out = rjd(&["rate", "--model", m.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let (_, v) = report(dir.path(), "rate");
    assert_eq!(v["verdict"], "fail");
    assert!(v["min_k_max"].as_f64().unwrap() > 0.0);
}

#[test]
fn gap_rate_on_exponential_pair() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("pair-exp-jumps");
    let out = rjd(&["gap-rate", "--model", m.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (_, v) = report(dir.path(), "gap-rate");
    assert!((v["certificate"]["kappa"].as_f64().unwrap() - 0.0748337).abs() < 1e-4);
    assert_eq!(v["gap"]["drift"], -3.0);
    assert_eq!(v["gap"]["sigma2"], 2.0);
    assert_eq!(v["effective_drifts"]["stable"], true);
}

#[test]
fn dominated_pair_uses_dominating_family() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("pair-unit-lower-jump");
    let out = rjd(&["gap-rate", "--model", m.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let (_, v) = report(dir.path(), "gap-rate");
    assert_eq!(v["certificate"]["dominating"], true);
    assert!((v["certificate"]["kappa"].as_f64().unwrap() - 0.160516).abs() < 1e-4);
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m = model("unit-shift-jumps");
    let args = [
        "verify-bound",
        "--model",
        m.to_str().unwrap(),
        "--paths",
        "500",
        "--dt",
        "0.01",
        "--seed",
        "17",
    ];
    assert_eq!(rjd(&args, a.path()).status.code(), Some(0));
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    assert_eq!(rjd(&threaded, b.path()).status.code(), Some(0));
    let names = |d: &Path| {
        let mut v: Vec<String> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    assert_eq!(names(a.path()), names(b.path()));
    assert_eq!(names(a.path()).len(), 2);
    for name in names(a.path()) {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name}"
        );
    }
    let csv = fs::read_to_string(
        a.path()
            .join(names(a.path()).into_iter().find(|n| n.ends_with(".csv")).unwrap()),
    )
    .unwrap();
    assert!(csv.starts_with("t,estimate,stderr,bound\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn decay_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("rbm-drift2");
    let args = [
        "verify-exact",
        "--model",
        m.to_str().unwrap(),
        "--paths",
        "500",
        "--dt",
        "0.01",
        "--times",
        "0.5,1,1.5",
    ];
    let out = rjd(&args, dir.path());
    let (json, v) = report(dir.path(), "verify-exact");
    // exit code follows the verdict, whichever it is
    let code = if v["verdict"] == "pass" { 0 } else { 2 };
    assert_eq!(out.status.code(), Some(code));
    let csv = fs::read_to_string(json.with_extension("csv")).unwrap();
    assert!(csv.starts_with("t,estimate,stderr,predicted\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("unit-shift-jumps");
    let base = ["simulate", "--model", m.to_str().unwrap(), "--t-max", "0.1"];
    let run = |env: Option<&str>, extra: &[&str]| {
        let d = tempfile::tempdir().unwrap();
        let mut c = Command::new(env!("CARGO_BIN_EXE_rjd"));
        c.args(base)
            .args(extra)
            .arg("--out")
            .arg(d.path())
            .env_remove("RJD_SEED");
        if let Some(s) = env {
            c.env("RJD_SEED", s);
        }
        assert_eq!(c.output().unwrap().status.code(), Some(0));
        report(d.path(), "simulate").1["seed"].as_u64().unwrap()
    };
    assert_eq!(run(Some("5"), &[]), 5);
    assert_eq!(run(Some("5"), &["--seed", "6"]), 6);
    assert_eq!(run(None, &[]), rjd_core::rng::DEFAULT_SEED);
    drop(dir);
}

#[test]
fn malformed_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"drift": -2, "sigma2": 1, "jumps": {"kind": "point_shift", "c": "one"}, "lambda0": 2}"#,
    )
    .unwrap();
    let out = rjd(&["rate", "--model", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("jumps"), "{err}");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("unit-shift-jumps");
    let m = m.to_str().unwrap();
    for args in [
        vec!["rate"],
        vec!["simulate", "--model", m, "--dt", "-1"],
        vec!["verify-exact", "--model", m, "--times", "1,0.5"],
        vec!["gap-equiv", "--model", m],
        vec!["frobnicate", "--model", m],
    ] {
        assert_eq!(rjd(&args, dir.path()).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn jump_free_pair_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let m = model("pair-no-jumps");
    let out = rjd(
        &[
            "gap-equiv",
            "--model",
            m.to_str().unwrap(),
            "--paths",
            "2000",
            "--dt",
            "0.01",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let (_, v) = report(dir.path(), "gap-equiv");
    assert_eq!(v["verdict"], "pass");
}
