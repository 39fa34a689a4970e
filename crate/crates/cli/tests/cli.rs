use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn kohn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kohn")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// Temp directory holding a calibrated `context.json`.
fn calibrated() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = kohn(&["calibrate", "--out", "."], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn calibration_is_accurate_and_deterministic() {
    let dir = calibrated();
    let first = std::fs::read(dir.path().join("context.json")).unwrap();
    let out = kohn(&["calibrate", "--context", "again.json"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read(dir.path().join("again.json")).unwrap(), first);
    let ctx: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert!(ctx["calibration"]["residual"].as_f64().unwrap() < 1e-3);
    let c = ctx["c_fund"].as_f64().unwrap();
    assert!((c * std::f64::consts::PI - 1.0).abs() < 1e-6, "{c}");
    assert_eq!(ctx["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"schema_version": 1, "boundary": {"n_r": -3}}"#);
    let out = kohn(&["calibrate", "--config", "bad.json"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
    write(dir.path(), "old.json", r#"{"schema_version": 0}"#);
    assert_eq!(code(&kohn(&["calibrate", "--config", "old.json"], dir.path())), 2);
    assert_eq!(code(&kohn(&["verify", "--context", "missing.json"], dir.path())), 2);
}

#[test]
fn verify_subset_writes_reports() {
    let dir = calibrated();
    let out = kohn(&["verify", "--context", "context.json", "--out", "v", "--checks", "hypergeometric,neumann_bc"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let (header, rows) = read_csv(&dir.path().join("v/verify_report.csv"));
    assert_eq!(header, ["name", "measured", "expected", "tol", "pass", "config_hash"]);
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[0].starts_with("hyp2f1") || r[0].starts_with("neumann_bc")));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("v/verify_report.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["config_hash"].as_str(), Some(rows[0][5].as_str()));
    let bad = kohn(&["verify", "--context", "context.json", "--checks", "nonsense"], dir.path());
    assert_eq!(code(&bad), 2);
}

#[test]
fn doubled_constant_fails_verification() {
    let dir = calibrated();
    let cfg = r#"{"schema_version": 1, "verify": {"lemma_poles": [{"zeta": [[0, 0]], "t": 1}, {"zeta": [[1, 0]], "t": 2}]}}"#;
    write(dir.path(), "interior.json", cfg);
    let args = |ctx: &'static str| ["verify", "--config", "interior.json", "--context", ctx, "--checks", "lemma"];
    assert_eq!(code(&kohn(&args("context.json"), dir.path())), 0);

    let mut ctx: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("context.json")).unwrap()).unwrap();
    let c = ctx["c_fund"].as_f64().unwrap();
    ctx["c_fund"] = (2.0 * c).into();
    write(dir.path(), "doubled.json", &ctx.to_string());
    assert_eq!(code(&kohn(&args("doubled.json"), dir.path())), 1);
}

#[test]
fn solve_mean_zero_angular_mode() {
    let dir = calibrated();
    write(dir.path(), "cfg.json", r#"{"schema_version": 1, "g": {"kind": "angular_mode", "m": 2}}"#);
    write(dir.path(), "points.txt", "# x,y,t\n0.5,0,1\n1,1,2\n");
    let out = kohn(&["solve", "--config", "cfg.json", "--context", "context.json", "--points", "points.txt", "--out", "s"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("s/solve_report.json")).unwrap()).unwrap();
    assert!(report["report"]["linear_residual"].as_f64().unwrap() < 1e-8);
    let (header, rows) = read_csv(&dir.path().join("s/density.csv"));
    assert_eq!(rows.len(), 16 * 24);
    assert!(column(&header, &rows, "phi").iter().all(|v| v.is_finite()));
    let (header, rows) = read_csv(&dir.path().join("s/solution.csv"));
    assert_eq!(header, ["x1", "y1", "t", "u", "config_hash"]);
    assert_eq!(rows.len(), 2);
}

#[test]
fn solve_rejects_nonzero_mean() {
    let dir = calibrated();
    write(dir.path(), "cfg.json", r#"{"schema_version": 1, "g": {"kind": "gaussian"}}"#);
    let out = kohn(&["solve", "--config", "cfg.json", "--context", "context.json"], dir.path());
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stdout).contains("compatibility residual"));
}

#[test]
fn zero_data_gives_zero_density() {
    let dir = calibrated();
    let out = kohn(&["solve", "--context", "context.json", "--out", "z"], dir.path());
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&dir.path().join("z/density.csv"));
    assert!(column(&header, &rows, "phi").iter().all(|v| *v == 0.0));
}

#[test]
fn tabulated_samples() {
    let dir = calibrated();
    let zeros = format!("value\n{}", "0\n".repeat(16 * 24));
    write(dir.path(), "g.csv", &zeros);
    write(dir.path(), "cfg.json", r#"{"schema_version": 1, "g": {"samples_file": "g.csv"}}"#);
    assert_eq!(code(&kohn(&["solve", "--config", "cfg.json", "--context", "context.json"], dir.path())), 0);
    write(dir.path(), "g.csv", "value\n0\n");
    assert_eq!(code(&kohn(&["solve", "--config", "cfg.json", "--context", "context.json"], dir.path())), 2);
    write(dir.path(), "missing.json", r#"{"schema_version": 1, "g": {"samples_file": "nope.csv"}}"#);
    assert_eq!(code(&kohn(&["solve", "--config", "missing.json", "--context", "context.json"], dir.path())), 2);
}

#[test]
fn inhomogeneous_zero_data() {
    let dir = calibrated();
    write(dir.path(), "cfg.json", r#"{"schema_version": 1, "points": ["0.5,0,1", "0,1,0.2"]}"#);
    let out = kohn(&["inhomogeneous", "--config", "cfg.json", "--context", "context.json", "--out", "h"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("h/inhomogeneous.csv"));
    assert_eq!(column(&header, &rows, "u"), [0.0, 0.0]);
}

#[test]
fn inhomogeneous_recovers_manufactured_solution() {
    // u0 = exp(-(|zeta|^4 + (t - 1)^2)); f = Delta_0 u0 and g = dperp u0 are
    // both circular, and u is determined up to a constant.
    let dir = calibrated();
    let cfg = r#"{
        "schema_version": 1,
        "boundary": {"n_r": 96, "n_theta": 16, "R": 3, "grading": 1.5},
        "volume": {"R_vol": 3, "T_vol": 5, "resolution": {"n_r": 96, "n_theta": 8, "n_t": 128, "grading_r": 1.5, "grading_t": 1.5}},
        "tolerances": {"circular_tol": 1e-5},
        "f": {"kind": "laplacian_of", "inner": {"kind": "gauge_gaussian", "center_t": 1}},
        "g": {"kind": "normal_derivative_of", "inner": {"kind": "gauge_gaussian", "center_t": 1}},
        "points": ["0.8,0,0.3", "0.4,0,1.2", "0,0.5,0.8", "1.1,0.2,1.6"]
    }"#;
    write(dir.path(), "cfg.json", cfg);
    let out = kohn(&["inhomogeneous", "--config", "cfg.json", "--context", "context.json", "--out", "h"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("h/inhomogeneous.csv"));
    let (x, y, t, u) = (
        column(&header, &rows, "x1"),
        column(&header, &rows, "y1"),
        column(&header, &rows, "t"),
        column(&header, &rows, "u"),
    );
    let diffs: Vec<f64> = (0..u.len())
        .map(|i| {
            let r2 = x[i] * x[i] + y[i] * y[i];
            (-(r2 * r2 + (t[i] - 1.0).powi(2))).exp() - u[i]
        })
        .collect();
    let spread = diffs.iter().cloned().fold(f64::MIN, f64::max) - diffs.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-2, "{diffs:?}");
}

#[test]
fn inhomogeneous_rejects_non_circular_data() {
    let dir = calibrated();
    write(dir.path(), "cfg.json", r#"{"schema_version": 1, "f": {"kind": "angular_mode", "m": 1}}"#);
    assert_eq!(code(&kohn(&["inhomogeneous", "--config", "cfg.json", "--context", "context.json"], dir.path())), 4);
}

#[test]
fn flux_sweep_converges_in_radius() {
    let dir = calibrated();
    assert_eq!(code(&kohn(&["converge", "--context", "context.json", "--out", "c"], dir.path())), 0);
    let (header, rows) = read_csv(&dir.path().join("c/convergence.csv"));
    let err = column(&header, &rows, "error");
    assert_eq!(err.len(), 3);
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
    assert_eq!(rows[0][header.iter().position(|h| h == "order").unwrap()], "");
}

#[test]
fn jump_sweep_is_first_order() {
    let dir = calibrated();
    let cfg = r#"{"schema_version": 1, "converge": {"study": "jump", "psi": {"kind": "gaussian"}, "beta": [1, 0], "h_sequence": [0.04, 0.02, 0.01]}}"#;
    write(dir.path(), "cfg.json", cfg);
    assert_eq!(code(&kohn(&["converge", "--config", "cfg.json", "--context", "context.json", "--out", "j"], dir.path())), 0);
    let (header, rows) = read_csv(&dir.path().join("j/convergence.csv"));
    let k = header.iter().position(|h| h == "order").unwrap();
    for row in &rows[1..] {
        let order: f64 = row[k].parse().unwrap();
        assert!(order > 0.95, "{order}");
    }
}

#[test]
fn single_row_sweep_has_no_fit() {
    let dir = calibrated();
    let cfg = r#"{"schema_version": 1, "converge": {"study": "flux", "pole": "0,0,1", "grids": [{"n_r": 60, "n_theta": 32, "R": 8}]}}"#;
    write(dir.path(), "cfg.json", cfg);
    assert_eq!(code(&kohn(&["converge", "--config", "cfg.json", "--context", "context.json", "--out", "one"], dir.path())), 0);
    let (header, rows) = read_csv(&dir.path().join("one/convergence.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][header.iter().position(|h| h == "order").unwrap()], "");
}
