use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn helmcouple(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helmcouple"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_with(cmd: &str, config: &str, dir: &Path) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    helmcouple(&[
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"{"shape": {"kind": "circle"}, "n_boundary": 64, "target_h": 0.1"#;

#[test]
fn malformed_json_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with("verify", "{ not json", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed JSON"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(helmcouple(&[]).status.code(), Some(2));
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(
        "sweep",
        &format!(r#"{SMALL}, "kappa_grid": []}}"#),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_creates_output_dir_and_finds_the_first_dirichlet_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{SMALL}, "kappa_grid": {{"start": 2.3, "stop": 2.5, "step": 0.01}},
               "options": {{"sweep": {{"w": false}}}}}}"#
        ),
    )
    .unwrap();
    let out = dir.path().join("does/not/exist");
    let o = helmcouple(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    assert_eq!(
        lines.next().unwrap(),
        "kappa,sigma_min_v,sigma_min_w,sigma_min_coupled,angle_v,angle_coupled"
    );
    assert_eq!(lines.count(), 21);

    let summary = json(out.join("sweep_summary.json"));
    let dips = summary["dips"].as_array().unwrap();
    assert_eq!(dips.len(), 1, "{summary}");
    let k = dips[0]["refined_kappa"].as_f64().unwrap();
    assert!((k - 2.404_825_557_7).abs() < 0.02, "dip at {k}");
    assert_eq!(dips[0]["bessel"]["order"], 0);
    assert_eq!(dips[0]["bessel"]["index"], 1);
    assert_eq!(
        dips[0]["fem"]["matched_lambdas"].as_array().unwrap().len(),
        1
    );
}

#[test]
fn coarse_verify_fails_idempotency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"shape": {"kind": "circle"}, "n_boundary": 8, "target_h": 0.5,
                  "options": {"verify": {"resonance_checks": false}}}"#;
    let o = run_with("verify", cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout["calderon_idempotency"]["pass"], false);
    let report = json(dir.path().join("out/verify_report.json"));
    assert_eq!(report["checks"], stdout);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn transparency_solve_has_small_scattered_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with("solve", &format!(r#"{SMALL}, "kappa": 1.0}}"#), dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = json(dir.path().join("out/solve_summary.json"));
    assert!(s["scattered_ratio"].as_f64().unwrap() <= 0.02, "{s}");
    assert!(
        s["interior_relative_error"].as_f64().unwrap() <= 0.02,
        "{s}"
    );
    assert_eq!(s["resonance_warning"], Value::Null);
    let field = std::fs::read_to_string(dir.path().join("out/exterior.csv")).unwrap();
    assert!(field.lines().nth(1) == Some("x,y,re,im,side"));
    assert_eq!(
        field.lines().filter(|l| l.ends_with(",exterior")).count(),
        8
    );
}

#[test]
fn zero_incident_wave_gives_zero_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{SMALL}, "kappa": 1.5, "options": {{"solve": {{"amplitude": 0.0}}}}}}"#);
    let o = run_with("solve", &cfg, dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = json(dir.path().join("out/solve_summary.json"));
    assert_eq!(s["max_scattered"].as_f64().unwrap(), 0.0);
    let interior = std::fs::read_to_string(dir.path().join("out/interior.csv")).unwrap();
    for line in interior.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn resonant_solve_warns_and_uses_least_squares() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with(
        "solve",
        &format!(r#"{SMALL}, "kappa": 2.4048255577}}"#),
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("warning") && err.contains("resonance"),
        "{err}"
    );
    let s = json(dir.path().join("out/solve_summary.json"));
    assert_eq!(s["rank_deficient"], true);
    assert_eq!(s["dropped_directions"], 1);
    // The dropped direction is annihilated by post-processing, so the
    // scattered field is still that of a transparent obstacle.
    assert!(s["scattered_ratio"].as_f64().unwrap() <= 0.02, "{s}");
}

#[test]
fn eig_is_reproducible_and_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"shape": {"kind": "circle"}, "n_boundary": 32, "target_h": 0.2, "options": {"eig": {"count": 4}}}"#;
    let o = run_with("eig", cfg, dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let first = std::fs::read(dir.path().join("out/eigenvalues.csv")).unwrap();
    let summary = json(dir.path().join("out/eig_summary.json"));
    let d = summary["dirichlet"]["eigenvalues"].as_array().unwrap();
    assert_eq!(d.len(), 4);
    assert!((d[0].as_f64().unwrap() - 5.783_185_962_9).abs() < 0.1);
    assert!(summary["neumann"]["eigenvalues"][0].as_f64().unwrap().abs() < 1e-8);

    let o = run_with("eig", cfg, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("out/eigenvalues.csv")).unwrap(),
        first
    );
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("# config_sha256="));
}

#[test]
fn kite_eig_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"shape": {"kind": "kite"}, "n_boundary": 64, "target_h": 0.2, "options": {"eig": {"count": 2}}}"#;
    let o = run_with("eig", cfg, dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = json(dir.path().join("out/eig_summary.json"));
    assert!(summary["dirichlet"].get("disk_eigenvalues").is_none());
}

#[test]
fn zero_threads_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, format!("{SMALL}}}")).unwrap();
    let o = helmcouple(&["eig", "--config", cfg.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
