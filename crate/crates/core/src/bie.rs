//! Nystrom discretization of the double-layer operators `W`, `W~` and the
//! solvers built on them.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{is_circular, normal_derivative_boundary, HeisenbergPoint, ScalarField, StencilConfig};
use crate::kernels::{dperp_psi_at, neumann_function, psi, KernelContext};
use crate::quadrature::{
    pairwise_sum, single_layer, BoundaryQuadratureRule, VolumeQuadratureRule,
};

/// Boundary density sampled at the nodes of one rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    pub values: Vec<f64>,
    pub rule_id: u64,
}

impl DensityVector {
    pub fn new(values: Vec<f64>, rule: &BoundaryQuadratureRule) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::DimensionMismatch {
                expected: rule.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density value".into()));
        }
        Ok(Self {
            values,
            rule_id: rule.id(),
        })
    }

    pub fn zeros(rule: &BoundaryQuadratureRule) -> Self {
        Self {
            values: vec![0.0; rule.len()],
            rule_id: rule.id(),
        }
    }

    pub fn from_field(f: &ScalarField, rule: &BoundaryQuadratureRule) -> Result<Self> {
        Self::new(rule.nodes.iter().map(|p| f.eval_re(p)).collect(), rule)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    W,
    Wtilde,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub entries: DMatrix<f64>,
    pub kind: OperatorKind,
    pub rule_id: u64,
}

const MATRIX_MAGIC: &[u8; 8] = b"KOHNMAT1";

impl OperatorMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Binary dump: magic `KOHNMAT1`, node count (u64 LE), kind byte
    /// (0 = W, 1 = W~), rule id (u64 LE), then the entries row-major as f64 LE.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&(self.size() as u64).to_le_bytes())?;
        out.write_all(&[match self.kind {
            OperatorKind::W => 0,
            OperatorKind::Wtilde => 1,
        }])?;
        out.write_all(&self.rule_id.to_le_bytes())?;
        for i in 0..self.size() {
            for j in 0..self.size() {
                out.write_all(&self.entries[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MATRIX_MAGIC {
            return Err(Error::InvalidArgument("not a matrix dump".into()));
        }
        let mut u = [0u8; 8];
        input.read_exact(&mut u)?;
        let n = u64::from_le_bytes(u) as usize;
        let mut kind = [0u8; 1];
        input.read_exact(&mut kind)?;
        let kind = match kind[0] {
            0 => OperatorKind::W,
            1 => OperatorKind::Wtilde,
            k => return Err(Error::InvalidArgument(format!("unknown operator kind {k}"))),
        };
        input.read_exact(&mut u)?;
        let rule_id = u64::from_le_bytes(u);
        let mut data = vec![0.0; n * n];
        for v in data.iter_mut() {
            input.read_exact(&mut u)?;
            *v = f64::from_le_bytes(u);
        }
        Ok(Self {
            entries: DMatrix::from_row_slice(n, n, &data),
            kind,
            rule_id,
        })
    }
}

/// Off-diagonal kernel rows `dperp Psi(node_i, node_j) w_j` with zero diagonal.
fn offdiagonal(ctx: &KernelContext, rule: &BoundaryQuadratureRule) -> Result<DMatrix<f64>> {
    let n = rule.len();
    let rows = rule
        .nodes
        .par_iter()
        .enumerate()
        .map(|(i, beta)| {
            let mut row = vec![0.0; n];
            for (j, (alpha, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                if i != j {
                    row[j] = dperp_psi_at(ctx, beta, alpha)? * w;
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Off-diagonal row sums of the raw kernel, before the diagonal is forced.
pub fn offdiagonal_row_sums(ctx: &KernelContext, rule: &BoundaryQuadratureRule) -> Result<Vec<f64>> {
    let m = offdiagonal(ctx, rule)?;
    Ok((0..m.nrows())
        .map(|i| pairwise_sum(m.row(i).iter().copied().collect::<Vec<_>>().as_slice()))
        .collect())
}

/// Nystrom matrix of `W` (derivative in the integration variable) or `W~`
/// (derivative in the evaluation point). The diagonal of `W` is
/// `-1 - sum_{j != i} W_ij`, so `W 1 = -1`; `W~ = D^{-1} W^T D` with
/// `D = diag(weights)`, the adjoint under `<phi, psi> = sum_j w_j phi_j psi_j`.
pub fn assemble(ctx: &KernelContext, rule: &BoundaryQuadratureRule, kind: OperatorKind) -> Result<OperatorMatrix> {
    ctx.require_calibrated()?;
    let mut w = offdiagonal(ctx, rule)?;
    for i in 0..w.nrows() {
        let row: Vec<f64> = w.row(i).iter().copied().collect();
        w[(i, i)] = -1.0 - pairwise_sum(&row);
    }
    let entries = match kind {
        OperatorKind::W => w,
        OperatorKind::Wtilde => {
            let wt = &rule.weights;
            DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(j, i)] * wt[j] / wt[i])
        }
    };
    Ok(OperatorMatrix {
        entries,
        kind,
        rule_id: rule.id(),
    })
}

/// Largest deviation between column `j` of `W~` (off the diagonal) and a
/// finite-difference normal derivative in the evaluation point, relative to
/// the largest off-diagonal entry of the column.
pub fn wtilde_spot_check(
    ctx: &KernelContext,
    rule: &BoundaryQuadratureRule,
    wtilde: &OperatorMatrix,
    j: usize,
    cfg: &StencilConfig,
) -> Result<f64> {
    if wtilde.kind != OperatorKind::Wtilde || wtilde.rule_id != rule.id() {
        return Err(Error::InvalidArgument("spot check needs the W~ matrix of this rule".into()));
    }
    let alpha = rule.nodes[j].clone();
    let ctx_c = *ctx;
    let alpha_c = alpha.clone();
    let field = ScalarField::real("Psi(., alpha_j)", move |b| psi(&ctx_c, b, &alpha_c).unwrap_or(f64::NAN)).with_pole(alpha);
    let scale = wtilde.entries.column(j).iter().enumerate().filter(|(i, _)| *i != j).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let mut worst = 0.0f64;
    for (i, beta) in rule.nodes.iter().enumerate() {
        if i == j || beta.zeta_norm() <= cfg.h {
            continue;
        }
        let fd = normal_derivative_boundary(&field, &beta.zeta, cfg)?.value * rule.weights[j];
        let entry = wtilde.entries[(i, j)];
        worst = worst.max((fd - entry).abs());
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// `int g dsigma`.
pub fn compatibility_check(g: &DensityVector, rule: &BoundaryQuadratureRule) -> Result<f64> {
    check_rule(g, rule)?;
    Ok(pairwise_sum(&g.values.iter().zip(&rule.weights).map(|(v, w)| v * w).collect::<Vec<_>>()))
}

fn abs_integral(g: &DensityVector, rule: &BoundaryQuadratureRule) -> f64 {
    pairwise_sum(&g.values.iter().zip(&rule.weights).map(|(v, w)| v.abs() * w).collect::<Vec<_>>())
}

fn check_rule(g: &DensityVector, rule: &BoundaryQuadratureRule) -> Result<()> {
    if g.rule_id != rule.id() {
        return Err(Error::RuleMismatch {
            expected: rule.id(),
            found: g.rule_id,
        });
    }
    if g.len() != rule.len() {
        return Err(Error::DimensionMismatch {
            expected: rule.len(),
            found: g.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Relative compatibility tolerance `|int g| / int |g|`.
    pub tol_compat: f64,
    /// Singular values below this fraction of the largest are dropped.
    pub svd_rel_threshold: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_compat: 1e-6,
            svd_rel_threshold: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub compatibility_integral: f64,
    pub compatibility_residual: f64,
    /// `||(I + W~) phi - g|| / ||g||` in the weighted norm.
    pub linear_residual: f64,
    pub min_singular_value: f64,
    pub second_min_singular_value: f64,
    /// `<phi, 1> / <1, 1>`.
    pub constant_mode_coefficient: f64,
    pub nodes: usize,
}

fn weighted_norm(v: &DVector<f64>, w: &[f64]) -> f64 {
    pairwise_sum(&v.iter().zip(w).map(|(x, w)| x * x * w).collect::<Vec<_>>()).sqrt()
}

/// Two smallest singular values of `I + M`.
pub fn smallest_singular_values(m: &OperatorMatrix) -> (f64, f64) {
    let a = DMatrix::identity(m.size(), m.size()) + &m.entries;
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| x.total_cmp(y));
    (sv[0], sv.get(1).copied().unwrap_or(f64::NAN))
}

/// Solve `(I + W~) phi = g` with the constraint `<phi, 1> = 0` appended as
/// an extra least-squares row, using a precomputed `W~`.
pub fn solve_with_matrix(
    wtilde: &OperatorMatrix,
    g: &DensityVector,
    rule: &BoundaryQuadratureRule,
    opts: &SolveOptions,
) -> Result<(DensityVector, SolveReport)> {
    check_rule(g, rule)?;
    if wtilde.kind != OperatorKind::Wtilde || wtilde.rule_id != rule.id() {
        return Err(Error::InvalidArgument("solver needs the W~ matrix of this rule".into()));
    }
    let integral = compatibility_check(g, rule)?;
    let scale = abs_integral(g, rule);
    let compat = if scale > 0.0 { integral.abs() / scale } else { 0.0 };
    if compat > opts.tol_compat {
        return Err(Error::Incompatible {
            integral,
            residual: compat,
        });
    }
    let n = rule.len();
    let system = DMatrix::identity(n, n) + &wtilde.entries;
    let wnorm = rule.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    let mut augmented = DMatrix::zeros(n + 1, n);
    augmented.view_mut((0, 0), (n, n)).copy_from(&system);
    for (j, w) in rule.weights.iter().enumerate() {
        augmented[(n, j)] = w / wnorm;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from_slice(&g.values);

    let svd = system.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| x.total_cmp(y));

    let big = augmented.svd(true, true);
    let eps = opts.svd_rel_threshold * big.singular_values.max();
    let phi = big.solve(&rhs, eps).map_err(|e| Error::LinearSolve(e.to_string()))?;
    let phi: DVector<f64> = phi.column(0).into_owned();
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("non-finite solution".into()));
    }

    let g_vec = DVector::from_column_slice(&g.values);
    let residual = &system * &phi - &g_vec;
    let g_norm = weighted_norm(&g_vec, &rule.weights);
    let linear_residual = if g_norm > 0.0 {
        weighted_norm(&residual, &rule.weights) / g_norm
    } else {
        weighted_norm(&residual, &rule.weights)
    };
    let total = pairwise_sum(&rule.weights);
    let mode = pairwise_sum(&phi.iter().zip(&rule.weights).map(|(p, w)| p * w).collect::<Vec<_>>()) / total;
    let report = SolveReport {
        compatibility_integral: integral,
        compatibility_residual: compat,
        linear_residual,
        min_singular_value: sv[0],
        second_min_singular_value: sv.get(1).copied().unwrap_or(f64::NAN),
        constant_mode_coefficient: mode,
        nodes: n,
    };
    Ok((DensityVector::new(phi.iter().copied().collect(), rule)?, report))
}

/// Interior Neumann problem through a single-layer density: assemble `W~`,
/// check `int g dsigma = 0`, and solve `(I + W~) phi = g` with the mean-zero
/// constraint. The solution is `u = V phi` (see [`eval_solution`]).
pub fn solve_interior_neumann(
    ctx: &KernelContext,
    g: &DensityVector,
    rule: &BoundaryQuadratureRule,
    opts: &SolveOptions,
) -> Result<(DensityVector, SolveReport)> {
    check_rule(g, rule)?;
    // Reject before paying for the assembly.
    let integral = compatibility_check(g, rule)?;
    let scale = abs_integral(g, rule);
    if scale > 0.0 && integral.abs() / scale > opts.tol_compat {
        return Err(Error::Incompatible {
            integral,
            residual: integral.abs() / scale,
        });
    }
    let wtilde = assemble(ctx, rule, OperatorKind::Wtilde)?;
    solve_with_matrix(&wtilde, g, rule, opts)
}

/// `u(beta) = V phi (beta)` for `beta` in the open half-space.
pub fn eval_solution(ctx: &KernelContext, phi: &DensityVector, rule: &BoundaryQuadratureRule, beta: &HeisenbergPoint) -> Result<f64> {
    if !(beta.t > 0.0) {
        return Err(Error::NotInDomain(beta.t));
    }
    single_layer(ctx, phi, rule, beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousOptions {
    /// Relative tolerance on `|int f dnu - int g dsigma| / (int |f| dnu + int |g| dsigma)`.
    pub tol_compat: f64,
    /// Relative tolerance of the circular fixed-point test.
    pub circular_tol: f64,
    pub circular_samples: usize,
}

impl Default for InhomogeneousOptions {
    fn default() -> Self {
        Self {
            tol_compat: 1e-3,
            circular_tol: 1e-8,
            circular_samples: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousSolution {
    pub values: Vec<f64>,
    pub volume_integral: f64,
    pub boundary_integral: f64,
    pub compatibility_residual: f64,
}

/// Normalization of the representation formula: `Delta_0 G(beta, .) = -2 delta_beta`
/// for the calibrated constant, so `u = -(1/2) [int G f dnu - int G g dsigma]`.
pub const REPRESENTATION_FACTOR: f64 = -0.5;

fn sample<T: Clone>(items: &[T], count: usize) -> Vec<T> {
    let step = (items.len() / count.max(1)).max(1);
    items.iter().step_by(step).take(count).cloned().collect()
}

/// Solution of `Delta_0 u = f` in the half-space, `dperp u = g` on the
/// boundary, for circular `f`, `g`, through the Neumann function.
pub fn solve_inhomogeneous(
    ctx: &KernelContext,
    f: &ScalarField,
    g: &ScalarField,
    rule: &BoundaryQuadratureRule,
    vol_rule: &VolumeQuadratureRule,
    betas: &[HeisenbergPoint],
    opts: &InhomogeneousOptions,
) -> Result<InhomogeneousSolution> {
    ctx.require_calibrated()?;
    for (field, nodes) in [(f, &vol_rule.nodes), (g, &rule.nodes)] {
        let samples = sample(nodes, opts.circular_samples);
        if !field.circular || !is_circular(field, &samples, 16, opts.circular_tol)? {
            return Err(Error::NotCircular(field.name().to_string()));
        }
    }
    for beta in betas {
        if beta.dim() != ctx.n {
            return Err(Error::DimensionMismatch {
                expected: ctx.n,
                found: beta.dim(),
            });
        }
        if beta.t < 0.0 {
            return Err(Error::NotInDomain(beta.t));
        }
    }
    let f_vals: Vec<f64> = vol_rule.nodes.par_iter().map(|p| f.eval_re(p)).collect();
    let g_vals: Vec<f64> = rule.nodes.par_iter().map(|p| g.eval_re(p)).collect();
    let weighted = |vals: &[f64], w: &[f64], abs: bool| {
        pairwise_sum(&vals.iter().zip(w).map(|(v, w)| if abs { v.abs() * w } else { v * w }).collect::<Vec<_>>())
    };
    let vol = weighted(&f_vals, &vol_rule.weights, false);
    let bnd = weighted(&g_vals, &rule.weights, false);
    let scale = weighted(&f_vals, &vol_rule.weights, true) + weighted(&g_vals, &rule.weights, true);
    let compat = if scale > 0.0 { (vol - bnd).abs() / scale } else { 0.0 };
    if compat > opts.tol_compat {
        return Err(Error::Incompatible {
            integral: vol - bnd,
            residual: compat,
        });
    }
    let green_sum = |beta: &HeisenbergPoint, nodes: &[HeisenbergPoint], vals: &[f64], weights: &[f64]| -> Result<f64> {
        let terms = nodes
            .par_iter()
            .zip(vals)
            .zip(weights)
            .map(|((p, v), w)| Ok(if *v == 0.0 { 0.0 } else { neumann_function(ctx, beta, p)? * v * w }))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    };
    let values = betas
        .iter()
        .map(|beta| {
            let vi = green_sum(beta, &vol_rule.nodes, &f_vals, &vol_rule.weights)?;
            let bi = green_sum(beta, &rule.nodes, &g_vals, &rule.weights)?;
            Ok(REPRESENTATION_FACTOR * (vi - bi))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(InhomogeneousSolution {
        values,
        volume_integral: vol,
        boundary_integral: bnd,
        compatibility_residual: compat,
    })
}
