use std::fmt;
use std::path::Path;

use anyhow::Context;
use kohn_core::bie::{eval_solution, solve_inhomogeneous, solve_interior_neumann};
use kohn_core::verification::{
    boundary_flux_raw, calibrate as run_calibration, interior_double_layer_approach, run_all, Calibration, INTERIOR_FLUX,
};
use kohn_core::{DensityVector, Error, HeisenbergPoint, KernelContext};
use serde::{Deserialize, Serialize};

use crate::config::{parse_points, ConfigError, DataSpec, RunConfig, SweepSpec, SCHEMA_VERSION};
use crate::output::{float, write_json, zeta_columns, Table};

/// Failure carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Verification(usize),
    Incompatible { integral: f64, residual: f64 },
    NotCircular(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) | Failure::Verification(_) => 1,
            Failure::Config(_) => 2,
            Failure::Incompatible { .. } => 3,
            Failure::NotCircular(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "configuration error: {e}"),
            Failure::Verification(k) => write!(f, "{k} verification check(s) failed"),
            Failure::Incompatible { integral, residual } => {
                write!(f, "incompatible data: integral {integral:e}, relative residual {residual:e}")
            }
            Failure::NotCircular(name) => write!(f, "data `{name}` is not circular"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Incompatible { integral, residual } => Failure::Incompatible { integral, residual },
            Error::NotCircular(name) => Failure::NotCircular(name),
            Error::InvalidArgument(msg) => Failure::Config(ConfigError(msg)),
            e @ Error::DimensionMismatch { .. } => Failure::Config(ConfigError(e.to_string())),
            e => Failure::Runtime(e.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

/// On-disk calibrated context.
#[derive(Debug, Serialize, Deserialize)]
pub struct ContextFile {
    pub schema_version: u32,
    pub config_hash: String,
    pub n: usize,
    pub c_fund: f64,
    pub a0: f64,
    pub calibration: Calibration,
}

fn load_context(path: &Path, cfg: &RunConfig) -> Result<KernelContext, Failure> {
    let bad = |msg: String| Failure::Config(ConfigError(format!("context {}: {msg}", path.display())));
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let file: ContextFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(bad(format!("unsupported schema_version {}", file.schema_version)));
    }
    if file.n != cfg.n {
        return Err(bad(format!("calibrated for n = {}, config has n = {}", file.n, cfg.n)));
    }
    KernelContext::calibrated(file.n, file.c_fund).map_err(|e| bad(e.to_string()))
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn points(cfg: &RunConfig, file: Option<&Path>) -> Result<Vec<HeisenbergPoint>, Failure> {
    let pts = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(ConfigError(format!("{}: {e}", path.display()))))?;
            parse_points(text.lines())
        }
        None => cfg.points(),
    }
    .map_err(Failure::Config)?;
    if let Some(p) = pts.iter().find(|p| p.dim() != cfg.n) {
        return Err(Failure::Config(ConfigError(format!("point of dimension {} in an n = {} run", p.dim(), cfg.n))));
    }
    Ok(pts)
}

fn point_fields(p: &HeisenbergPoint) -> Vec<String> {
    p.zeta.iter().flat_map(|z| [float(z.re), float(z.im)]).chain([float(p.t)]).collect()
}

pub fn calibrate(cfg: &RunConfig, path: &Path) -> Outcome {
    let rules = cfg.calibration.grids.iter().map(|g| g.build(cfg.n)).collect::<Result<Vec<_>, _>>()?;
    let cal = run_calibration(cfg.n, &rules).map_err(|e| Failure::Runtime(e.into()))?;
    if cal.residual > cfg.calibration.max_residual {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "calibration residual {:e} exceeds {:e}",
            cal.residual,
            cfg.calibration.max_residual
        )));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let file = ContextFile {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.hash(),
        n: cfg.n,
        c_fund: cal.context.c_fund,
        a0: cal.context.a0,
        calibration: cal,
    };
    write_json(path, &file)?;
    println!("c_fund = {:.16e}, residual = {:e}", file.c_fund, file.calibration.residual);
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    config_hash: String,
    passed: bool,
    checks: &'a [kohn_core::CheckResult],
}

pub fn verify(cfg: &RunConfig, context: &Path, out: &Path, checks: Option<Vec<String>>) -> Outcome {
    let ctx = load_context(context, cfg)?;
    let mut vc = cfg.verify.clone();
    if checks.is_some() {
        vc.checks = checks;
    }
    let report = run_all(&ctx, &vc)?;
    ensure_dir(out)?;
    let hash = cfg.hash();
    write_json(
        &out.join("verify_report.json"),
        &VerifyOutput {
            config_hash: hash.clone(),
            passed: report.passed,
            checks: &report.checks,
        },
    )?;
    let mut table = Table::create(&out.join("verify_report.csv"), &["name", "measured", "expected", "tol", "pass"], &hash)?;
    for c in &report.checks {
        table.row([c.name.clone(), float(c.measured), float(c.expected), float(c.tolerance), c.passed.to_string()])?;
        println!("{:<32} {}", c.name, if c.passed { "pass" } else { "FAIL" });
    }
    table.finish()?;
    match report.failures().count() {
        0 => Ok(()),
        k => Err(Failure::Verification(k)),
    }
}

fn read_samples(path: &Path, expected: usize) -> Result<Vec<f64>, Failure> {
    let bad = |msg: String| Failure::Config(ConfigError(format!("samples {}: {msg}", path.display())));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let column = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .position(|h| h == "value")
        .ok_or_else(|| bad("no `value` column".into()))?;
    let values = reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| bad(e.to_string()))?;
            r.get(column).unwrap_or("").trim().parse::<f64>().map_err(|e| bad(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != expected {
        return Err(bad(format!("{} values for {expected} boundary nodes", values.len())));
    }
    Ok(values)
}

#[derive(Serialize)]
struct SolveOutput {
    config_hash: String,
    report: kohn_core::SolveReport,
}

pub fn solve(cfg: &RunConfig, context: &Path, out: &Path, points_file: Option<&Path>) -> Outcome {
    let ctx = load_context(context, cfg)?;
    let pts = points(cfg, points_file)?;
    let rule = cfg.boundary.build(cfg.n)?;
    let g = match &cfg.g {
        DataSpec::Field(spec) => DensityVector::from_field(&spec.build()?, &rule)?,
        DataSpec::Samples { samples_file } => DensityVector::new(read_samples(samples_file, rule.len())?, &rule)?,
    };
    let (phi, report) = match solve_interior_neumann(&ctx, &g, &rule, &cfg.tolerances.solve()) {
        Err(Error::Incompatible { integral, residual }) => {
            println!("compatibility residual {residual:e} (integral {integral:e})");
            return Err(Failure::Incompatible { integral, residual });
        }
        other => other?,
    };
    ensure_dir(out)?;
    let hash = cfg.hash();
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(zeta_columns(cfg.n));
    header.extend(["weight".into(), "g".into(), "phi".into()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::create(&out.join("density.csv"), &header, &hash)?;
    for (i, node) in rule.nodes.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(node.zeta.iter().flat_map(|z| [float(z.re), float(z.im)]));
        row.extend([float(rule.weights[i]), float(g.values[i]), float(phi.values[i])]);
        table.row(row)?;
    }
    table.finish()?;
    write_solution(&out.join("solution.csv"), cfg.n, &pts, &hash, |_, p| Ok(eval_solution(&ctx, &phi, &rule, p)?))?;
    println!(
        "linear residual {:e}, constant mode {:e}, smallest singular values {:e}, {:e}",
        report.linear_residual, report.constant_mode_coefficient, report.min_singular_value, report.second_min_singular_value
    );
    write_json(&out.join("solve_report.json"), &SolveOutput { config_hash: hash, report })?;
    Ok(())
}

fn write_solution(
    path: &Path,
    n: usize,
    pts: &[HeisenbergPoint],
    hash: &str,
    eval: impl Fn(usize, &HeisenbergPoint) -> Result<f64, Failure>,
) -> Outcome {
    let mut header = zeta_columns(n);
    header.extend(["t".into(), "u".into()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = Table::create(path, &header, hash)?;
    for (i, p) in pts.iter().enumerate() {
        let mut row = point_fields(p);
        row.push(float(eval(i, p)?));
        table.row(row)?;
    }
    table.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct InhomogeneousOutput {
    config_hash: String,
    volume_integral: f64,
    boundary_integral: f64,
    compatibility_residual: f64,
    points: usize,
}

pub fn inhomogeneous(cfg: &RunConfig, context: &Path, out: &Path, points_file: Option<&Path>) -> Outcome {
    let ctx = load_context(context, cfg)?;
    let pts = points(cfg, points_file)?;
    let DataSpec::Field(g_spec) = &cfg.g else {
        return Err(Failure::Config(ConfigError("the inhomogeneous problem needs g as a named field".into())));
    };
    let f = cfg.f.build()?;
    let g = g_spec.build()?;
    let rule = cfg.boundary.build(cfg.n)?;
    let vol = cfg.volume.build(cfg.n)?;
    let sol = solve_inhomogeneous(&ctx, &f, &g, &rule, &vol, &pts, &cfg.tolerances.inhomogeneous())?;
    ensure_dir(out)?;
    let hash = cfg.hash();
    write_solution(&out.join("inhomogeneous.csv"), cfg.n, &pts, &hash, |i, _| Ok(sol.values[i]))?;
    write_json(
        &out.join("inhomogeneous.json"),
        &InhomogeneousOutput {
            config_hash: hash,
            volume_integral: sol.volume_integral,
            boundary_integral: sol.boundary_integral,
            compatibility_residual: sol.compatibility_residual,
            points: pts.len(),
        },
    )?;
    println!("compatibility residual {:e}", sol.compatibility_residual);
    Ok(())
}

struct SweepRow {
    label: [String; 3],
    size: f64,
    value: f64,
    reference: f64,
}

/// Empirical order between successive rows, `log(e_prev / e) / log(s / s_prev)`.
pub fn fitted_orders(sizes: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|k| {
            (k > 0)
                .then(|| (errors[k - 1] / errors[k]).ln() / (sizes[k] / sizes[k - 1]).ln())
                .filter(|o| o.is_finite())
        })
        .collect()
}

pub fn converge(cfg: &RunConfig, context: &Path, out: &Path) -> Outcome {
    let ctx = load_context(context, cfg)?;
    let (study, rows) = match &cfg.converge {
        SweepSpec::Flux { pole, grids } => {
            let pole = parse_points(std::iter::once(pole.as_str())).map_err(Failure::Config)?.remove(0);
            if !(pole.t > 0.0) {
                return Err(Failure::Config(ConfigError("flux sweep needs an interior pole".into())));
            }
            let rows = grids
                .iter()
                .map(|g| {
                    let rule = g.build(cfg.n)?;
                    Ok(SweepRow {
                        label: [g.n_r.to_string(), g.n_theta.to_string(), float(g.r_max)],
                        size: g.r_max,
                        value: boundary_flux_raw(&ctx, &pole, &rule)?,
                        reference: INTERIOR_FLUX,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            ("flux", rows)
        }
        SweepSpec::Jump(jc) => {
            let (limit, values) = interior_double_layer_approach(&ctx, jc)?;
            let rows = jc
                .h_sequence
                .iter()
                .zip(values)
                .map(|(h, value)| SweepRow {
                    label: [String::new(), String::new(), float(*h)],
                    size: 1.0 / h,
                    value,
                    reference: limit,
                })
                .collect();
            ("jump", rows)
        }
    };
    let errors: Vec<f64> = rows.iter().map(|r| (r.value - r.reference).abs()).collect();
    let sizes: Vec<f64> = rows.iter().map(|r| r.size).collect();
    let orders = fitted_orders(&sizes, &errors);
    ensure_dir(out)?;
    let scale_name = if study == "flux" { "R" } else { "h" };
    let mut table = Table::create(
        &out.join("convergence.csv"),
        &["study", "n_r", "n_theta", scale_name, "value", "reference", "error", "order"],
        &cfg.hash(),
    )?;
    for ((row, err), order) in rows.iter().zip(&errors).zip(&orders) {
        let [a, b, c] = row.label.clone();
        table.row([study.to_string(), a, b, c, float(row.value), float(row.reference), float(*err), order.map(float).unwrap_or_default()])?;
        println!("{study} {scale_name} = {} error {err:e} order {}", row.label[2], order.map(|o| format!("{o:.2}")).unwrap_or("-".into()));
    }
    table.finish()?;
    Ok(())
}
