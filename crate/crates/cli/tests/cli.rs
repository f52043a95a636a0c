use serde_json::Value;
use std::io::Write;

fn run(args: &[&str]) -> (i32, Vec<u8>, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = wbh_cli::run(std::iter::once("wbh").chain(args.iter().copied()), &mut out, &mut err);
    (code, out, String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_slice(&out).unwrap()
}

const B0: [&str; 10] = ["--n", "6", "--alpha", "0", "--lambda", "0", "--mu", "0", "--p", "5"];

fn with_b0<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(B0.iter()).chain(tail).copied().collect()
}

#[test]
fn info_at_the_reference_instance() {
    let v = json(&with_b0(&["info"], &[]));
    assert_eq!(v["schema"], "1");
    assert_eq!(v["K2"].as_f64(), Some(10.0));
    assert_eq!(v["K0"].as_f64(), Some(9.0));
    let eig: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(eig, [3.0, 1.0, -1.0, -3.0]);
    assert_eq!(v["conditions"]["c1"], true);
}

#[test]
fn orbit_document() {
    let v = json(&with_b0(&["orbit"], &["--a", "1.0"]));
    let o = &v["orbit"];
    assert!(o["residual_sup"].as_f64().unwrap() < 1e-8);
    assert!((o["period"].as_f64().unwrap() - 4.4371357547).abs() < 1e-8);
}

#[test]
fn verify_from_a_manifest() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(
        f,
        r#"[{{"identity": "Rellich22", "function": "gaussian", "n": 6, "alpha": 0}},
            {{"identity": "NormDecomp", "function": "r2_gaussian", "n": 8, "alpha": -1, "lambda": 1, "mu": 0.5}},
            {{"identity": "Hardy31", "function": "gaussian", "n": 5, "alpha": -1}}]"#
    )
    .unwrap();
    let v = json(&["verify", "--manifest", f.path().to_str().unwrap()]);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(v["all_passed"], true);
    for r in &reports[..2] {
        assert!(r["rel_err"].as_f64().unwrap() < 1e-6, "{r}");
    }
}

#[test]
fn skipped_manifest_entry_is_not_a_pass() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    // r^{-1/2} near the origin: the tail never becomes negligible
    write!(f, r#"[{{"identity": "Hardy31", "function": "gaussian", "n": 5, "alpha": 0.5}}]"#).unwrap();
    let (code, out, _) = run(&["verify", "--manifest", f.path().to_str().unwrap()]);
    assert_eq!(code, wbh_cli::EXIT_CHECK_FAILED);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["skipped"].as_array().unwrap().len(), 1);
}

#[test]
fn failing_manifest_entry_exits_nonzero() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    // α outside (−n, n−4) is refused
    write!(f, r#"[{{"identity": "Rellich22", "function": "gaussian", "n": 6, "alpha": 3}}]"#).unwrap();
    let (code, _, _) = run(&["verify", "--manifest", f.path().to_str().unwrap()]);
    assert_ne!(code, 0);
}

#[test]
fn amplitude_sweep_period_decreases() {
    let v = json(&with_b0(&["sweep", "--command", "orbit"], &["--over", "a=0.1:l-0.001:20"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    let periods: Vec<f64> = rows.iter().map(|r| r["period"].as_f64().unwrap()).collect();
    assert!(periods.windows(2).all(|w| w[1] < w[0]), "{periods:?}");
    assert!((periods[19] - 3.7480).abs() < 1e-2);
}

#[test]
fn lambda_sweep_c1_boundary() {
    let v = json(&["sweep", "--command", "info", "--n", "6", "--p", "5", "--over", "lambda=-20:20:41"]);
    for r in v["rows"].as_array().unwrap() {
        let lambda = r["lambda"].as_f64().unwrap();
        assert_eq!(r["c1"].as_bool().unwrap(), lambda <= 8.0, "λ = {lambda}");
    }
}

#[test]
fn empty_grid_is_a_usage_error() {
    let (code, _, err) = run(&with_b0(&["sweep", "--command", "info"], &["--over", "lambda=0:1:0"]));
    assert_eq!(code, wbh_cli::EXIT_USAGE);
    assert!(err.contains("empty"), "{err}");
}

#[test]
fn config_file_matches_flags() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, r#"{{"n": 6, "alpha": 0, "lambda": 0, "mu": 0, "p": 5, "a": 1.0}}"#).unwrap();
    let (c1, from_cfg, _) = run(&["orbit", "--config", f.path().to_str().unwrap()]);
    let (c2, from_flags, _) = run(&with_b0(&["orbit"], &["--a", "1.0"]));
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(from_cfg, from_flags);
    // flags win over the file
    let (_, over, _) = run(&["orbit", "--config", f.path().to_str().unwrap(), "--a", "1.2"]);
    let v: Value = serde_json::from_slice(&over).unwrap();
    assert_eq!(v["orbit"]["a"].as_f64(), Some(1.2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, r#"{{"n": 6, "p": 5, "gamma": 1}}"#).unwrap();
    assert_eq!(run(&["info", "--config", f.path().to_str().unwrap()]).0, wbh_cli::EXIT_USAGE);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = with_b0(&["best-constant"], &["--grid-L", "20", "--grid-h", "0.02"]);
    assert_eq!(run(&args).1, run(&args).1);
}

#[test]
fn csv_output_and_file_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bubble.csv");
    let args = with_b0(&["explicit"], &["--format", "csv", "--output", path.to_str().unwrap()]);
    let (code, stdout, _) = run(&args);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 482);
}

#[test]
fn regime_and_validation_exit_codes() {
    // K0 < 0 has no equilibrium: no periodic orbit
    let (code, _, _) = run(&["orbit", "--n", "6", "--p", "5", "--lambda", "20", "--a", "0.5"]);
    assert_eq!(code, wbh_cli::EXIT_REGIME);
    let (code, _, _) = run(&["info", "--n", "6", "--p", "5", "--alpha", "-7"]);
    assert_eq!(code, wbh_cli::EXIT_VALIDATION);
}

#[test]
fn failed_sweep_points_stay_in_the_table() {
    let v = json(&["sweep", "--command", "homoclinic", "--n", "6", "--p", "5", "--over", "lambda=0:20:3"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["status"], "ok");
    assert_ne!(rows[2]["status"], "ok");
    assert_ne!(rows[2]["exit_code"], 0);
}
