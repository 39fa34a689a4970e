use std::f64::consts::PI;

use kohn_core::bie::{self, assemble, compatibility_check, solve_interior_neumann, solve_with_matrix, wtilde_spot_check};
use kohn_core::quadrature::build_boundary_rule;
use kohn_core::verification::{run_all, VerifyConfig};
use kohn_core::{
    BoundaryQuadratureRule, DensityVector, Error, FieldSpec, KernelContext, OperatorKind, OperatorMatrix, ScalarField, SolveOptions,
    StencilConfig,
};
use proptest::prelude::*;

fn ctx() -> KernelContext {
    KernelContext::calibrated(1, 1.0 / PI).unwrap()
}

fn small_rule() -> BoundaryQuadratureRule {
    build_boundary_rule(1, 8, 12, 4.0, 1.5).unwrap()
}

fn weighted_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| x * y * w).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wtilde_is_the_weighted_adjoint(phi in prop::collection::vec(-1.0..1.0f64, 96), psi in prop::collection::vec(-1.0..1.0f64, 96)) {
        let rule = small_rule();
        let w = assemble(&ctx(), &rule, OperatorKind::W).unwrap();
        let wt = assemble(&ctx(), &rule, OperatorKind::Wtilde).unwrap();
        let apply = |m: &OperatorMatrix, v: &[f64]| (&m.entries * nalgebra::DVector::from_column_slice(v)).iter().copied().collect::<Vec<_>>();
        let lhs = weighted_dot(&apply(&w, &phi), &psi, &rule.weights);
        let rhs = weighted_dot(&phi, &apply(&wt, &psi), &rule.weights);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }
}

#[test]
fn w_maps_constants_to_minus_one() {
    let rule = small_rule();
    let w = assemble(&ctx(), &rule, OperatorKind::W).unwrap();
    for i in 0..rule.len() {
        let s: f64 = w.entries.row(i).iter().sum();
        assert!((s + 1.0).abs() < 1e-12);
    }
}

#[test]
fn wtilde_entries_match_finite_differences() {
    let rule = small_rule();
    let wt = assemble(&ctx(), &rule, OperatorKind::Wtilde).unwrap();
    // columns from the second ring outward; on the innermost ring neighbours are
    // closer than the stencil resolves
    for j in [17, 40, 95] {
        let worst = wtilde_spot_check(&ctx(), &rule, &wt, j, &StencilConfig::new(1e-3, 4).unwrap()).unwrap();
        assert!(worst < 1e-5, "column {j}: {worst}");
    }
}

#[test]
fn assembly_requires_calibration() {
    let rule = small_rule();
    assert!(matches!(assemble(&KernelContext::unit(1).unwrap(), &rule, OperatorKind::W), Err(Error::Uncalibrated)));
}

#[test]
fn operator_matrix_file_round_trip() {
    let rule = small_rule();
    let wt = assemble(&ctx(), &rule, OperatorKind::Wtilde).unwrap();
    let mut file = tempfile::tempfile().unwrap();
    wt.write_binary(&mut file).unwrap();
    use std::io::{Seek, SeekFrom};
    file.seek(SeekFrom::Start(0)).unwrap();
    let back = OperatorMatrix::read_binary(&mut file).unwrap();
    assert_eq!(back, wt);
}

#[test]
fn mean_zero_data_is_solved_and_constrained() {
    let rule = build_boundary_rule(1, 16, 24, 6.0, 1.5).unwrap();
    let g = DensityVector::from_field(&FieldSpec::AngularMode { m: 2, scale: 1.0 }.build().unwrap(), &rule).unwrap();
    let (phi, report) = solve_interior_neumann(&ctx(), &g, &rule, &SolveOptions::default()).unwrap();
    assert!(report.linear_residual < 1e-8, "{}", report.linear_residual);
    assert!(report.constant_mode_coefficient.abs() < 1e-10);
    assert!(report.compatibility_residual < 1e-12);
    assert_eq!(phi.len(), rule.len());
}

#[test]
fn zero_data_gives_zero_density() {
    let rule = small_rule();
    let (phi, report) = solve_interior_neumann(&ctx(), &DensityVector::zeros(&rule), &rule, &SolveOptions::default()).unwrap();
    assert!(phi.values.iter().all(|v| *v == 0.0));
    assert_eq!(report.linear_residual, 0.0);
}

#[test]
fn incompatible_data_is_rejected_with_the_moment() {
    let rule = build_boundary_rule(1, 400, 8, 8.0, 1.0).unwrap();
    let g = DensityVector::from_field(&FieldSpec::Gaussian { amplitude: 2.0, scale: 1.0 }.build().unwrap(), &rule).unwrap();
    match solve_interior_neumann(&ctx(), &g, &rule, &SolveOptions::default()) {
        Err(Error::Incompatible { integral, residual }) => {
            assert!((integral - PI.powf(1.5) / 2.0).abs() < 1e-6, "{integral}");
            assert!((residual - 1.0).abs() < 1e-12);
        }
        other => panic!("expected rejection, got {other:?}"),
    }
    assert!((compatibility_check(&g, &rule).unwrap() - PI.powf(1.5) / 2.0).abs() < 1e-6);
}

#[test]
fn solve_with_matrix_checks_the_operator() {
    let rule = small_rule();
    let w = assemble(&ctx(), &rule, OperatorKind::W).unwrap();
    let g = DensityVector::zeros(&rule);
    assert!(solve_with_matrix(&w, &g, &rule, &SolveOptions::default()).is_err());
}

#[test]
fn inhomogeneous_problem_rejects_non_circular_data() {
    let rule = small_rule();
    let vol = kohn_core::quadrature::build_volume_rule(1, 3.0, 3.0, Default::default()).unwrap();
    let f = FieldSpec::AngularMode { m: 1, scale: 1.0 }.build().unwrap();
    let g = ScalarField::zero().with_circular(true);
    let err = bie::solve_inhomogeneous(&ctx(), &f, &g, &rule, &vol, &[], &Default::default()).unwrap_err();
    assert!(matches!(err, Error::NotCircular(_)));
}

#[test]
fn inhomogeneous_problem_rejects_incompatible_data() {
    // f = 1 near the origin, g = 0: int f != int g
    let rule = small_rule();
    let vol = kohn_core::quadrature::build_volume_rule(1, 2.0, 2.0, Default::default()).unwrap();
    let f = FieldSpec::GaugeGaussian {
        amplitude: 1.0,
        center_t: 0.5,
        scale: 0.7,
    }
    .build()
    .unwrap();
    let g = ScalarField::zero().with_circular(true);
    let err = bie::solve_inhomogeneous(&ctx(), &f, &g, &rule, &vol, &[], &Default::default()).unwrap_err();
    assert!(matches!(err, Error::Incompatible { .. }));
}

#[test]
fn verification_subsets() {
    let cfg = VerifyConfig {
        checks: Some(vec!["hypergeometric".into(), "neumann_bc".into()]),
        ..VerifyConfig::default()
    };
    let report = run_all(&ctx(), &cfg).unwrap();
    assert!(report.passed);
    assert_eq!(report.checks.len(), 5);
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("name,measured,expected,tol,pass\n"));
    assert_eq!(text.lines().count(), 6);
    let mut json = Vec::new();
    report.write_json(&mut json).unwrap();
    let parsed: Vec<kohn_core::CheckResult> = serde_json::from_slice(&json).unwrap();
    assert_eq!(parsed, report.checks);
}

#[test]
fn verify_config_round_trips() {
    let cfg = VerifyConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<VerifyConfig>(&text).unwrap(), cfg);
    let partial: VerifyConfig = serde_json::from_str(r#"{"checks": ["lemma"]}"#).unwrap();
    assert_eq!(partial.flux_grids, VerifyConfig::default().flux_grids);
}
