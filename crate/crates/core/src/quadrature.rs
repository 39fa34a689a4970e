//! Quadrature on the boundary plane `t = 0` (measure `dsigma = (|zeta|/2) ds`)
//! and on the half-space volume, plus the layer-potential sums built on them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bie::DensityVector;
use crate::error::{Error, Result};
use crate::heisenberg::{HeisenbergPoint, ScalarField};
use crate::kernels::{dperp_psi_at, psi, KernelContext};
use crate::special::gamma;

/// How the nodes of a boundary rule were laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleLayout {
    /// Graded midpoint in `|zeta|`, trapezoid in the angle (n = 1).
    Polar,
    /// Graded midpoint in `|zeta|`, Halton directions on the sphere (n > 1).
    QuasiMonteCarlo,
    /// Graded Gauss-Legendre panels around one near-singular point (n = 1).
    Patch,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryQuadratureRule {
    pub n: usize,
    pub r_max: f64,
    pub grading: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub layout: RuleLayout,
    pub nodes: Vec<HeisenbergPoint>,
    pub weights: Vec<f64>,
    id: u64,
}

/// Serialized layout: each node row is `[re_1, im_1, ..., re_n, im_n, weight]`.
#[derive(Serialize, Deserialize)]
struct RuleJson {
    n: usize,
    #[serde(rename = "R")]
    r_max: f64,
    grading: f64,
    n_r: usize,
    n_theta: usize,
    layout: RuleLayout,
    nodes: Vec<Vec<f64>>,
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl BoundaryQuadratureRule {
    fn finish(mut self) -> Self {
        let mut bytes = Vec::new();
        bytes.extend((self.n as u64).to_le_bytes());
        bytes.extend((self.nodes.len() as u64).to_le_bytes());
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            for z in &p.zeta {
                bytes.extend(z.re.to_le_bytes());
                bytes.extend(z.im.to_le_bytes());
            }
            bytes.extend(w.to_le_bytes());
        }
        self.id = fnv1a(bytes);
        self
    }

    /// Content hash identifying the node set; densities carry it.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Quasi-Monte-Carlo rules converge more slowly than the polar ones.
    pub fn lower_accuracy(&self) -> bool {
        self.layout == RuleLayout::QuasiMonteCarlo
    }

    pub fn to_json(&self) -> Result<String> {
        let nodes = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| {
                let mut row: Vec<f64> = p.zeta.iter().flat_map(|z| [z.re, z.im]).collect();
                row.push(*w);
                row
            })
            .collect();
        Ok(serde_json::to_string(&RuleJson {
            n: self.n,
            r_max: self.r_max,
            grading: self.grading,
            n_r: self.n_r,
            n_theta: self.n_theta,
            layout: self.layout,
            nodes,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RuleJson = serde_json::from_str(s)?;
        let mut nodes = Vec::with_capacity(raw.nodes.len());
        let mut weights = Vec::with_capacity(raw.nodes.len());
        for row in raw.nodes {
            if row.len() != 2 * raw.n + 1 {
                return Err(Error::InvalidArgument(format!(
                    "node row has {} entries, expected {}",
                    row.len(),
                    2 * raw.n + 1
                )));
            }
            let zeta = row[..2 * raw.n].chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
            nodes.push(HeisenbergPoint::new(zeta, 0.0)?);
            weights.push(row[2 * raw.n]);
        }
        Ok(Self {
            n: raw.n,
            r_max: raw.r_max,
            grading: raw.grading,
            n_r: raw.n_r,
            n_theta: raw.n_theta,
            layout: raw.layout,
            nodes,
            weights,
            id: 0,
        }
        .finish())
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Surface area of the unit sphere in `C^n = R^{2n}`.
fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powi(n as i32) / gamma(n as f64)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    x
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// `count` Halton-generated directions on the unit sphere of `C^n`.
fn halton_directions(n: usize, count: usize) -> Result<Vec<Vec<Complex64>>> {
    if 2 * n > PRIMES.len() {
        return Err(Error::InvalidArgument(format!("quasi-Monte-Carlo rules support n <= {}", PRIMES.len() / 2)));
    }
    Ok((1..=count as u64)
        .map(|i| {
            let gauss: Vec<Complex64> = (0..n)
                .map(|j| {
                    let u1 = radical_inverse(i, PRIMES[2 * j]).max(f64::MIN_POSITIVE);
                    let u2 = radical_inverse(i, PRIMES[2 * j + 1]);
                    Complex64::from_polar((-2.0 * u1.ln()).sqrt(), 2.0 * PI * u2)
                })
                .collect();
            let norm = gauss.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            gauss.into_iter().map(|z| z / norm).collect()
        })
        .collect())
}

/// Graded midpoint nodes `rho_k = R s_k^g`, `s_k = (k - 1/2) / n_r`, with
/// Jacobian weights `R g s_k^{g-1} / n_r`.
fn graded_midpoint(r: f64, n_r: usize, g: f64) -> Vec<(f64, f64)> {
    (1..=n_r)
        .map(|k| {
            let s = (k as f64 - 0.5) / n_r as f64;
            (r * s.powf(g), r * g * s.powf(g - 1.0) / n_r as f64)
        })
        .collect()
}

/// Boundary rule on the disc `|zeta| <= R`. For `n = 1` a graded polar grid;
/// for `n > 1` graded radii times Halton directions.
pub fn build_boundary_rule(n: usize, n_r: usize, n_theta: usize, r_max: f64, grading: f64) -> Result<BoundaryQuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if n_r < 4 || n_theta < 4 {
        return Err(Error::InvalidArgument(format!("resolutions must be >= 4, got n_r = {n_r}, n_theta = {n_theta}")));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("R must be positive, got {r_max}")));
    }
    if !(grading >= 1.0 && grading.is_finite()) {
        return Err(Error::InvalidArgument(format!("grading must be >= 1, got {grading}")));
    }
    let radial = graded_midpoint(r_max, n_r, grading);
    let (directions, layout, angular_weight) = if n == 1 {
        let dirs = (0..n_theta)
            .map(|m| vec![Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n_theta as f64)])
            .collect();
        (dirs, RuleLayout::Polar, 2.0 * PI / n_theta as f64)
    } else {
        (halton_directions(n, n_theta)?, RuleLayout::QuasiMonteCarlo, sphere_area(n) / n_theta as f64)
    };
    let mut nodes = Vec::with_capacity(n_r * n_theta);
    let mut weights = Vec::with_capacity(n_r * n_theta);
    for &(rho, jac) in &radial {
        // (|zeta| / 2) * rho^{2n-1} d rho d omega
        let w = 0.5 * rho * rho.powi(2 * n as i32 - 1) * jac * angular_weight;
        for dir in &directions {
            nodes.push(HeisenbergPoint::boundary(dir.iter().map(|d| d * rho).collect()));
            weights.push(w);
        }
    }
    Ok(BoundaryQuadratureRule {
        n,
        r_max,
        grading,
        n_r,
        n_theta,
        layout,
        nodes,
        weights,
        id: 0,
    }
    .finish())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Panels on `[center - half_width, center + half_width]` whose widths grow
/// geometrically (ratio 2) away from `center`, starting at `finest`.
pub fn graded_panels(center: f64, finest: f64, half_width: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut edges = vec![0.0];
    let mut e = finest;
    while e < half_width {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(half_width);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for pair in edges.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let rad = 0.5 * (pair[1] - pair[0]);
        for sign in [1.0, -1.0] {
            for (x, w) in gx.iter().zip(&gw) {
                pts.push(center + sign * (mid + rad * x));
                wts.push(rad * w);
            }
        }
    }
    (pts, wts)
}

/// Tensor Gauss-Legendre rule on the square of half-width `half_width`
/// around the boundary point `center` (n = 1), graded toward the local point
/// `(u, v) = (0, v0)` where `u` runs along `center` and `v` across it.
/// Panel widths start at `du` and `dv`.
pub fn build_patch_rule(center: Complex64, v0: f64, du: f64, dv: f64, half_width: f64) -> Result<BoundaryQuadratureRule> {
    if !(du > 0.0 && dv > 0.0 && half_width > du.max(dv)) {
        return Err(Error::InvalidArgument("patch rule needs 0 < du, dv < half_width".into()));
    }
    let dir = if center.norm() > 0.0 {
        center / center.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let (us, uw) = graded_panels(0.0, du, half_width, 10);
    let (vs, vw) = graded_panels(v0, dv, half_width, 10);
    let mut nodes = Vec::with_capacity(us.len() * vs.len());
    let mut weights = Vec::with_capacity(us.len() * vs.len());
    for (u, wu) in us.iter().zip(&uw) {
        for (v, wv) in vs.iter().zip(&vw) {
            let zeta = center + dir * Complex64::new(*u, *v);
            if zeta.norm() == 0.0 {
                continue;
            }
            nodes.push(HeisenbergPoint::boundary(vec![zeta]));
            weights.push(0.5 * zeta.norm() * wu * wv);
        }
    }
    Ok(BoundaryQuadratureRule {
        n: 1,
        r_max: center.norm() + half_width * 2f64.sqrt(),
        grading: 2.0,
        n_r: us.len(),
        n_theta: vs.len(),
        layout: RuleLayout::Patch,
        nodes,
        weights,
        id: 0,
    }
    .finish())
}

fn checked_sum(terms: Vec<f64>, what: &str) -> Result<f64> {
    if let Some(i) = terms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} at node {i}")));
    }
    Ok(pairwise_sum(&terms))
}

/// `sum_j f(node_j) w_j`.
pub fn integrate_boundary<F>(f: F, rule: &BoundaryQuadratureRule) -> Result<f64>
where
    F: Fn(&HeisenbergPoint) -> f64 + Sync,
{
    let terms: Vec<f64> = rule.nodes.par_iter().zip(&rule.weights).map(|(p, w)| f(p) * w).collect();
    checked_sum(terms, "boundary integrand")
}

/// Warning text when a declared decay exponent is too slow for the plane
/// integrals to converge absolutely.
pub fn decay_warning(n: usize, k: f64) -> Option<String> {
    let threshold = 2.0 * n as f64 + 1.0;
    (k <= threshold).then(|| {
        format!("declared decay k = {k} does not exceed 2n + 1 = {threshold}; truncated plane integrals may not converge")
    })
}

fn node_index(rule: &BoundaryQuadratureRule, beta: &HeisenbergPoint) -> Option<usize> {
    if beta.t != 0.0 {
        return None;
    }
    rule.nodes.iter().position(|p| p.zeta == beta.zeta)
}

fn check_density(density: &DensityVector, rule: &BoundaryQuadratureRule) -> Result<()> {
    if density.rule_id != rule.id() {
        return Err(Error::RuleMismatch {
            expected: rule.id(),
            found: density.rule_id,
        });
    }
    if density.values.len() != rule.len() {
        return Err(Error::DimensionMismatch {
            expected: rule.len(),
            found: density.values.len(),
        });
    }
    Ok(())
}

/// `V(beta) = sum_j phi_j Psi(beta, alpha_j) w_j`.
pub fn single_layer(ctx: &KernelContext, density: &DensityVector, rule: &BoundaryQuadratureRule, beta: &HeisenbergPoint) -> Result<f64> {
    check_density(density, rule)?;
    if let Some(i) = node_index(rule, beta) {
        return Err(Error::NodeCoincidence(i));
    }
    let terms = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .zip(&density.values)
        .map(|((a, w), phi)| Ok(if *phi == 0.0 { 0.0 } else { phi * psi(ctx, beta, a)? * w }))
        .collect::<Result<Vec<f64>>>()?;
    checked_sum(terms, "single layer")
}

/// Plain double layer `sum_j psi(alpha_j) dperp Psi(beta, alpha_j) w_j` at any
/// `beta` off the node set (interior, exterior or boundary).
pub fn double_layer(ctx: &KernelContext, density: &ScalarField, rule: &BoundaryQuadratureRule, beta: &HeisenbergPoint) -> Result<f64> {
    if let Some(i) = node_index(rule, beta) {
        return Err(Error::NodeCoincidence(i));
    }
    let terms = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(a, w)| {
            let v = density.eval_re(a);
            Ok(if v == 0.0 { 0.0 } else { v * dperp_psi_at(ctx, beta, a)? * w })
        })
        .collect::<Result<Vec<f64>>>()?;
    checked_sum(terms, "double layer")
}

/// Boundary double layer by singularity subtraction:
/// `sum_j [psi(alpha_j) - psi(beta)] dperp Psi(beta, alpha_j) w_j - psi(beta)`.
///
/// The constant term is the boundary-pole flux value `-1`, so `psi = 1`
/// returns exactly `-1` regardless of the rule.
pub fn double_layer_subtracted(
    ctx: &KernelContext,
    density: &ScalarField,
    rule: &BoundaryQuadratureRule,
    beta_boundary: &HeisenbergPoint,
) -> Result<f64> {
    if beta_boundary.t != 0.0 {
        return Err(Error::NotOnBoundary(beta_boundary.t));
    }
    let at_beta = density.eval_re(beta_boundary);
    let terms = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(a, w)| {
            let diff = density.eval_re(a) - at_beta;
            Ok(if diff == 0.0 { 0.0 } else { diff * dperp_psi_at(ctx, beta_boundary, a)? * w })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(checked_sum(terms, "subtracted double layer")? - at_beta)
}

/// Normal derivative of the single layer in the evaluation point,
/// `sum_j psi(alpha_j) dperp_beta Psi(beta, alpha_j) w_j`, using the symmetry
/// `Psi(beta, alpha) = Psi(alpha, beta)`. `beta` must not be characteristic.
pub fn single_layer_dperp(ctx: &KernelContext, density: &ScalarField, rule: &BoundaryQuadratureRule, beta: &HeisenbergPoint) -> Result<f64> {
    if let Some(i) = node_index(rule, beta) {
        return Err(Error::NodeCoincidence(i));
    }
    let terms = rule
        .nodes
        .par_iter()
        .zip(&rule.weights)
        .map(|(a, w)| {
            let v = density.eval_re(a);
            Ok(if v == 0.0 { 0.0 } else { v * dperp_psi_at(ctx, a, beta)? * w })
        })
        .collect::<Result<Vec<f64>>>()?;
    checked_sum(terms, "single layer normal derivative")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeResolution {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_t: usize,
    pub grading_r: f64,
    pub grading_t: f64,
}

impl Default for VolumeResolution {
    fn default() -> Self {
        Self {
            n_r: 48,
            n_theta: 32,
            n_t: 48,
            grading_r: 1.5,
            grading_t: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeQuadratureRule {
    pub n: usize,
    pub r_vol: f64,
    pub t_vol: f64,
    pub resolution: VolumeResolution,
    pub nodes: Vec<HeisenbergPoint>,
    pub weights: Vec<f64>,
}

impl VolumeQuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }
}

/// Tensor rule on `{|zeta| <= R_vol} x (0, T_vol]` for the Lebesgue (Haar)
/// measure, graded toward `zeta = 0` and toward `t = 0`.
pub fn build_volume_rule(n: usize, r_vol: f64, t_vol: f64, res: VolumeResolution) -> Result<VolumeQuadratureRule> {
    if !(r_vol > 0.0 && t_vol > 0.0 && r_vol.is_finite() && t_vol.is_finite()) {
        return Err(Error::InvalidArgument(format!("volume truncations must be positive, got {r_vol}, {t_vol}")));
    }
    if res.n_t < 1 || res.grading_r < 1.0 || res.grading_t < 1.0 {
        return Err(Error::InvalidArgument("invalid volume resolution".into()));
    }
    let base = build_boundary_rule(n, res.n_r, res.n_theta, r_vol, res.grading_r)?;
    let t_nodes = graded_midpoint(t_vol, res.n_t, res.grading_t);
    let mut nodes = Vec::with_capacity(base.len() * t_nodes.len());
    let mut weights = Vec::with_capacity(base.len() * t_nodes.len());
    for (p, w) in base.nodes.iter().zip(&base.weights) {
        // undo the |zeta| / 2 surface factor
        let area = 2.0 * w / p.zeta_norm();
        for &(t, wt) in &t_nodes {
            nodes.push(HeisenbergPoint {
                zeta: p.zeta.clone(),
                t,
            });
            weights.push(area * wt);
        }
    }
    Ok(VolumeQuadratureRule {
        n,
        r_vol,
        t_vol,
        resolution: res,
        nodes,
        weights,
    })
}

pub fn integrate_volume<F>(f: F, rule: &VolumeQuadratureRule) -> Result<f64>
where
    F: Fn(&HeisenbergPoint) -> f64 + Sync,
{
    let terms: Vec<f64> = rule.nodes.par_iter().zip(&rule.weights).map(|(p, w)| f(p) * w).collect();
    checked_sum(terms, "volume integrand")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_weight_unit_disc() {
        let rule = build_boundary_rule(1, 64, 16, 1.0, 3.0).unwrap();
        assert!((rule.total_weight() / (PI / 3.0) - 1.0).abs() < 1e-3);
        assert!(rule.weights.iter().all(|w| *w > 0.0));
        assert!(rule.nodes.iter().all(|p| p.zeta_norm() > 0.0));
    }

    #[test]
    fn total_weight_scales_like_r_cubed() {
        let a = build_boundary_rule(1, 32, 8, 1.0, 2.0).unwrap().total_weight();
        let b = build_boundary_rule(1, 32, 8, 2.0, 2.0).unwrap().total_weight();
        assert!((b / a - 8.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_grading_spacing() {
        let rule = build_boundary_rule(1, 8, 4, 2.0, 1.0).unwrap();
        let radii: Vec<f64> = rule.nodes.iter().step_by(4).map(|p| p.zeta_norm()).collect();
        for pair in radii.windows(2) {
            assert!((pair[1] - pair[0] - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_resolutions() {
        assert!(build_boundary_rule(1, 3, 8, 1.0, 1.0).is_err());
        assert!(build_boundary_rule(1, 8, 8, 0.0, 1.0).is_err());
        assert!(build_boundary_rule(1, 8, 8, 1.0, 0.5).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn odd_integrand_vanishes() {
        let rule = build_boundary_rule(1, 32, 32, 4.0, 2.0).unwrap();
        let v = integrate_boundary(|p| p.zeta[0].re * (-p.zeta_norm_sqr()).exp(), &rule).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let rule = build_boundary_rule(1, 8, 8, 1.0, 1.0).unwrap();
        assert!(matches!(integrate_boundary(|_| f64::NAN, &rule), Err(Error::NonFinite(_))));
    }

    #[test]
    fn json_round_trip() {
        let rule = build_boundary_rule(2, 4, 6, 1.5, 2.0).unwrap();
        assert!(rule.lower_accuracy());
        let back = BoundaryQuadratureRule::from_json(&rule.to_json().unwrap()).unwrap();
        assert_eq!(back, rule);
        assert_eq!(back.id(), rule.id());
    }

    #[test]
    fn qmc_total_weight_n2() {
        // int_{|zeta|<=1} |zeta|/2 ds over R^4 = |S^3| / 10 = pi^2 / 5
        let rule = build_boundary_rule(2, 64, 64, 1.0, 2.0).unwrap();
        assert!((rule.total_weight() / (PI * PI / 5.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn volume_box() {
        let rule = build_volume_rule(1, 2.0, 3.0, VolumeResolution::default()).unwrap();
        assert!((rule.total_weight() / (PI * 4.0 * 3.0) - 1.0).abs() < 1e-3);
        assert!(rule.nodes.iter().all(|p| p.t > 0.0));
        let v = integrate_volume(|p| if p.zeta_norm() > 5.0 { 1.0 } else { 0.0 }, &rule).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn decay_threshold() {
        assert!(decay_warning(1, 3.0).is_some());
        assert!(decay_warning(1, 3.5).is_none());
    }
}
