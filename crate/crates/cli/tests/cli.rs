use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use curvcanon_cli::{load_curve_spec, CliError};

const X6: &str = r#"{"kind": "hyperelliptic", "coeffs": [[-1, 0], [0, 0], [0, 0], [0, 0], [0, 0], [0, 0], [1, 0]]}"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn curvcanon(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_curvcanon"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("CURVCANON_THREADS", t);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn loads_valid_and_rejects_invalid_curve_files() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "x6.json", X6);
    assert_eq!(load_curve_spec(&ok).unwrap().genus(), 2);

    // (x - 1)^2 (x^4 + 1)
    let rep = write(
        dir.path(),
        "rep.json",
        r#"{"kind": "hyperelliptic", "coeffs": [[1, 0], [-2, 0], [1, 0], [0, 0], [1, 0], [-2, 0], [1, 0]]}"#,
    );
    match load_curve_spec(&rep) {
        Err(CliError::Validation { source: curvcanon::Error::NotSquarefree { root, .. }, .. }) => {
            assert!((root - num_complex::Complex64::new(1.0, 0.0)).norm() < 1e-6)
        }
        other => panic!("{other:?}"),
    }

    let empty = write(dir.path(), "empty.json", "{\n  \"kind\": \"hyperelliptic\",\n  \"coeffs\": []\n}");
    match load_curve_spec(&empty) {
        Err(CliError::Parse { line, message, .. }) => {
            assert!(line >= 3);
            assert!(message.contains("coeffs must not be empty"));
        }
        other => panic!("{other:?}"),
    }
    let o = curvcanon(&["info", "--curve", empty.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("empty.json:"));
}

#[test]
fn info_echoes_config_and_genus() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x6.json", X6);
    let o = curvcanon(&["info", "--curve", p.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["genus"], 2);
    assert_eq!(v["config"]["quad"]["target_rel"], 1e-7);
    assert_eq!(v["config"]["grid"]["n"], 200);
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x6.json", X6);
    let o = curvcanon(&["info", "--curve", p.to_str().unwrap(), "--no-such-flag"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = curvcanon(&["curvature", "--curve", p.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--x"));
}

#[test]
fn scan_is_nonpositive_and_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x6.json", X6);
    let args = ["scan", "--curve", p.to_str().unwrap(), "--grid", "80", "--seed", "3"];
    let a = curvcanon(&args, Some("1"));
    let b = curvcanon(&args, Some("4"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("re_x,im_x,re_y,im_y,chart,lambda,theta,degeneracy"));
    let mut rows = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 8);
        assert!(["x", "y"].contains(&f[4]));
        let theta: f64 = f[6].parse().unwrap();
        assert!(theta <= 1e-9);
        assert!(f[5].parse::<f64>().unwrap() > 0.0);
        rows += 1;
    }
    assert!(rows > 2 * 80 * 80);
    assert!(text.contains("# seed=3"));
}

#[test]
fn weierstrass_finds_sixth_roots_of_unity() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x6.json", X6);
    let o = curvcanon(&["weierstrass", "--curve", p.to_str().unwrap(), "--format", "json", "--grid", "60"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let clusters = v["result"]["clusters"].as_array().unwrap();
    assert_eq!(clusters.len(), 6);
    for c in clusters {
        let x = num_complex::Complex64::new(c["point"]["x"][0].as_f64().unwrap(), c["point"]["x"][1].as_f64().unwrap());
        assert!((x.powu(6) - 1.0).norm() < 6e-3);
    }
}

#[test]
fn property_failures_and_gate_errors_use_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x6.json", X6);
    let o = curvcanon(&["symprod", "--curve", p.to_str().unwrap(), "--d", "2"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gonality gate failed"));

    let args = ["curvature", "--curve", p.to_str().unwrap(), "--x", "-0.5,0.3", "--format", "csv"];
    assert_eq!(curvcanon(&args, None).status.code(), Some(0));
    let mut strict = args.to_vec();
    strict.push("--tol-theta=-100");
    assert_eq!(curvcanon(&strict, None).status.code(), Some(2));
}

#[test]
fn symprod_d1_reduces_to_inverse_density() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x6.json", X6);
    let o = curvcanon(&["symprod", "--curve", p.to_str().unwrap(), "--d", "1", "--trials", "20"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["max_rel_dev"].as_f64().unwrap() < 1e-12);
    assert_eq!(v["result"]["spectra"].as_array().unwrap().len(), 20);
}
