use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn problem(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn run(args: &[&str], input: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthomod"))
        .args(&args[..1])
        .arg(input)
        .args(&args[1..])
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const JACOBI: &str = r#"{"family": {"name": "jacobi", "alpha": 1, "gamma": 0},
  "divisor": {"kind": "linear", "C": "auto", "D": -1}, "n": 6}"#;

#[test]
fn transform_rational_is_exact() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "j.json", JACOBI);
    let out = run(&["transform", "--backend", "rational"], &input);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,kappa,kappa_approx,alpha,alpha_approx,alpha_hat,alpha_hat_approx"
    );
    for (n, line) in (1..=6).zip(lines) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[0], n.to_string());
        assert_eq!(cells[1], format!("-{}/{}", n, 2 * n + 1));
    }
}

#[test]
fn transform_json_and_output_file() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "j.json", JACOBI);
    let target = dir.path().join("out.json");
    let out = run(&["transform", "--format", "json", "--output", target.to_str().unwrap()], &input);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let k1: f64 = rows[0]["kappa"]["approx"].as_str().unwrap().parse().unwrap();
    assert!((k1 + 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "j.json", JACOBI);
    for args in [&["transform"][..], &["verify"], &["expand", "--points", "0.3"], &["oracle"]] {
        let first = stdout(&run(args, &input));
        let second = stdout(&run(args, &input));
        assert!(!first.is_empty());
        assert_eq!(first, second, "{args:?}");
    }
}

#[test]
fn kesten_mckay_preset_has_constant_rows() {
    let dir = TempDir::new().unwrap();
    let input = problem(
        &dir,
        "km.json",
        r#"{"family": {"name": "semicircle"}, "divisor": {"kind": "kesten-mckay", "rho": "1/2", "y": 1}, "n": 8}"#,
    );
    let out = run(&["transform"], &input);
    assert_eq!(out.status.code(), Some(0));
    for line in stdout(&out).lines().skip(2) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cells[1] + 0.5).abs() < 1e-30);
        assert!((cells[3] - 0.25).abs() < 1e-30);
        assert!((cells[7] - 1.0).abs() < 1e-30);
    }
}

#[test]
fn verify_passes_then_fails_at_zero_tolerance() {
    let dir = TempDir::new().unwrap();
    let input = problem(&dir, "j.json", JACOBI);
    let ok = run(&["verify"], &input);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).lines().skip(1).all(|l| l.ends_with(",pass")));
    let strict = run(&["verify", "--tol", "0"], &input);
    assert_eq!(strict.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("verification failed"));
}

#[test]
fn expand_reports_parseval() {
    let dir = TempDir::new().unwrap();
    let input = problem(
        &dir,
        "j3.json",
        r#"{"family": {"name": "jacobi", "alpha": 3, "gamma": 0}, "divisor": {"kind": "linear", "D": -1}, "n": 40}"#,
    );
    let out = run(&["expand", "--points", "0.3,1/2"], &input);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rhs = text
        .lines()
        .find_map(|l| l.strip_prefix("# parseval_rhs = "))
        .expect("rhs row");
    assert!(rhs.starts_with("1.125"), "{rhs}");
    assert!(text.lines().any(|l| l.starts_with("3/10,")));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("{ not json", "transform"),
        (r#"{"family": {"name": "legendre"}, "divisor": {"kind": "linear", "D": 2}, "colour": 1}"#, "transform"),
        (r#"{"family": {"name": "legendre"}, "divisor": {"kind": "linear", "D": "two"}}"#, "transform"),
        (r#"{"family": {"name": "jacobi", "alpha": -2, "gamma": 0}, "divisor": {"kind": "linear", "D": 2}}"#, "transform"),
        (r#"{"family": {"name": "legendre"}, "divisor": {"kind": "monic", "coefficients": [24, 26, 9]}}"#, "transform"),
    ];
    for (i, (json, cmd)) in cases.iter().enumerate() {
        let input = problem(&dir, &format!("bad{i}.json"), json);
        let out = run(&[cmd], &input);
        assert_eq!(out.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["transform"], &dir.path().join("missing.json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divisor_on_support_exits_3() {
    let dir = TempDir::new().unwrap();
    let input = problem(
        &dir,
        "inside.json",
        r#"{"family": {"name": "legendre"}, "divisor": {"kind": "linear", "D": "1/2"}}"#,
    );
    assert_eq!(run(&["transform"], &input).status.code(), Some(3));
}

#[test]
fn cubic_oracle_and_singular_gram_system() {
    let dir = TempDir::new().unwrap();
    let cubic = problem(
        &dir,
        "cubic.json",
        r#"{"family": {"name": "legendre"}, "divisor": {"kind": "monic", "coefficients": [24, 26, 9]}, "n": 5}"#,
    );
    let out = run(&["oracle"], &cubic);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("n,c1,c1_approx,c2,c2_approx,c3,c3_approx"));

    let tiny = problem(
        &dir,
        "tiny.json",
        r#"{"family": {"name": "charlier", "lambda": "1/10000"}, "divisor": {"kind": "monic", "coefficients": [6, 5]},
            "n": 6, "precision_bits": 64}"#,
    );
    assert_eq!(run(&["oracle", "--r", "4"], &tiny).status.code(), Some(4));
}
