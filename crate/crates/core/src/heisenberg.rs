//! Group law, gauge and left-invariant differential operators on the
//! Heisenberg group `H_n = C^n x R`.
//!
//! The product is `(z, t)(w, s) = (z + w, t + s + 2 Im(z . conj(w)))`, the
//! horizontal frame is
//!
//! ```text
//! X_j = d/dx_j + 2 y_j d/dt,   Y_j = d/dy_j - 2 x_j d/dt,   T = d/dt,
//! Z_j = (X_j - i Y_j) / 2,     Zbar_j = (X_j + i Y_j) / 2,
//! ```
//!
//! and every derivative in this module is a central finite difference in the
//! coordinates composed with those coefficients, so it applies to arbitrary
//! user-supplied fields.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(zeta, t)` of `H_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergPoint {
    pub zeta: Vec<Complex64>,
    pub t: f64,
}

impl HeisenbergPoint {
    pub fn new(zeta: Vec<Complex64>, t: f64) -> Result<Self> {
        if zeta.is_empty() {
            return Err(Error::InvalidArgument("a point needs n >= 1".into()));
        }
        let p = Self { zeta, t };
        if !p.is_finite() {
            return Err(Error::NonFinite(format!("point {p}")));
        }
        Ok(p)
    }

    /// Point of `H_1` from real coordinates `(x, y, t)`.
    pub fn h1(x: f64, y: f64, t: f64) -> Self {
        Self {
            zeta: vec![Complex64::new(x, y)],
            t,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            zeta: vec![Complex64::new(0.0, 0.0); n],
            t: 0.0,
        }
    }

    /// Boundary point `(zeta, 0)`.
    pub fn boundary(zeta: Vec<Complex64>) -> Self {
        Self { zeta, t: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    pub fn zeta_norm_sqr(&self) -> f64 {
        self.zeta.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn zeta_norm(&self) -> f64 {
        self.zeta_norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.zeta.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Common phase rotation `(e^{i theta} zeta, t)`.
    pub fn rotate(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            zeta: self.zeta.iter().map(|z| z * phase).collect(),
            t: self.t,
        }
    }

    fn shifted(&self, coord: Coord, delta: f64) -> Self {
        let mut q = self.clone();
        match coord {
            Coord::X(j) => q.zeta[j].re += delta,
            Coord::Y(j) => q.zeta[j].im += delta,
            Coord::T => q.t += delta,
        }
        q
    }
}

impl fmt::Display for HeisenbergPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, z) in self.zeta.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", z.re, z.im)?;
        }
        write!(f, "; t = {})", self.t)
    }
}

pub(crate) fn check_dims(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(())
}

/// Hermitian product `z . conj(w)`.
pub fn hermitian(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn group_mul(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    check_dims(p, q)?;
    let zeta = p.zeta.iter().zip(&q.zeta).map(|(a, b)| a + b).collect();
    let t = p.t + q.t + 2.0 * hermitian(&p.zeta, &q.zeta).im;
    Ok(HeisenbergPoint { zeta, t })
}

pub fn group_inverse(p: &HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint {
        zeta: p.zeta.iter().map(|z| -z).collect(),
        t: -p.t,
    }
}

/// Koranyi gauge `(|zeta|^4 + t^2)^{1/4}`.
pub fn gauge_norm(p: &HeisenbergPoint) -> f64 {
    let r2 = p.zeta_norm_sqr();
    (r2 * r2 + p.t * p.t).sqrt().sqrt()
}

/// Gauge distance `|p^{-1} q|`.
pub fn gauge_distance(p: &HeisenbergPoint, q: &HeisenbergPoint) -> Result<f64> {
    Ok(gauge_norm(&group_mul(&group_inverse(p), q)?))
}

/// Anisotropic dilation `(r zeta, r^2 t)`.
pub fn dilate(r: f64, p: &HeisenbergPoint) -> Result<HeisenbergPoint> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {r}")));
    }
    Ok(HeisenbergPoint {
        zeta: p.zeta.iter().map(|z| z * r).collect(),
        t: r * r * p.t,
    })
}

pub type FieldFn = dyn Fn(&HeisenbergPoint) -> Complex64 + Send + Sync;

/// A complex-valued function on `H_n` with the metadata the solvers need.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    eval: Arc<FieldFn>,
    /// Declared `k` in `|f| = O(|zeta|^{-k})`.
    pub decay_exponent: f64,
    pub circular: bool,
    /// Points where the field is singular.
    pub poles: Vec<HeisenbergPoint>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("decay_exponent", &self.decay_exponent)
            .field("circular", &self.circular)
            .field("poles", &self.poles)
            .finish()
    }
}

impl ScalarField {
    pub fn new<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&HeisenbergPoint) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            decay_exponent: 0.0,
            circular: false,
            poles: Vec::new(),
        }
    }

    pub fn real<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&HeisenbergPoint) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, move |p| Complex64::new(eval(p), 0.0))
    }

    pub fn constant(value: f64) -> Self {
        Self::real(format!("constant({value})"), move |_| value).with_circular(true)
    }

    pub fn zero() -> Self {
        Self::constant(0.0).with_decay(f64::INFINITY)
    }

    pub fn with_decay(mut self, k: f64) -> Self {
        self.decay_exponent = k;
        self
    }

    pub fn with_circular(mut self, circular: bool) -> Self {
        self.circular = circular;
        self
    }

    pub fn with_pole(mut self, pole: HeisenbergPoint) -> Self {
        self.poles.push(pole);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, p: &HeisenbergPoint) -> Complex64 {
        (self.eval)(p)
    }

    pub fn eval_re(&self, p: &HeisenbergPoint) -> f64 {
        (self.eval)(p).re
    }

    pub(crate) fn func(&self) -> &FieldFn {
        &*self.eval
    }
}

/// Central difference order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    Fourth,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StencilConfig {
    pub h: f64,
    pub order: StencilOrder,
}

impl StencilConfig {
    pub fn new(h: f64, order: u8) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("stencil step must be positive, got {h}")));
        }
        let order = match order {
            2 => StencilOrder::Second,
            4 => StencilOrder::Fourth,
            other => {
                return Err(Error::InvalidArgument(format!("stencil order must be 2 or 4, got {other}")))
            }
        };
        Ok(Self { h, order })
    }

    /// Second order with `h = 1e-4 max(1, |p|)`.
    pub fn default_at(p: &HeisenbergPoint) -> Self {
        Self {
            h: 1e-4 * gauge_norm(p).max(1.0),
            order: StencilOrder::Second,
        }
    }

    fn reach(&self) -> f64 {
        match self.order {
            StencilOrder::Second => self.h,
            StencilOrder::Fourth => 2.0 * self.h,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Coord {
    X(usize),
    Y(usize),
    T,
}

/// The left-invariant fields `X_j, Y_j, T, Z_j, Zbar_j` (`j` is zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorField {
    X(usize),
    Y(usize),
    T,
    Z(usize),
    ZBar(usize),
}

fn partial<F: Fn(&HeisenbergPoint) -> Complex64 + ?Sized>(f: &F, p: &HeisenbergPoint, coord: Coord, cfg: &StencilConfig) -> Complex64 {
    let h = cfg.h;
    match cfg.order {
        StencilOrder::Second => (f(&p.shifted(coord, h)) - f(&p.shifted(coord, -h))) / (2.0 * h),
        StencilOrder::Fourth => {
            (-f(&p.shifted(coord, 2.0 * h)) + 8.0 * f(&p.shifted(coord, h)) - 8.0 * f(&p.shifted(coord, -h))
                + f(&p.shifted(coord, -2.0 * h)))
                / (12.0 * h)
        }
    }
}

fn apply_raw<F: Fn(&HeisenbergPoint) -> Complex64 + ?Sized>(which: VectorField, f: &F, p: &HeisenbergPoint, cfg: &StencilConfig) -> Complex64 {
    let i = Complex64::i();
    match which {
        VectorField::X(j) => {
            partial(f, p, Coord::X(j), cfg) + 2.0 * p.zeta[j].im * partial(f, p, Coord::T, cfg)
        }
        VectorField::Y(j) => {
            partial(f, p, Coord::Y(j), cfg) - 2.0 * p.zeta[j].re * partial(f, p, Coord::T, cfg)
        }
        VectorField::T => partial(f, p, Coord::T, cfg),
        VectorField::Z(j) => 0.5 * (apply_raw(VectorField::X(j), f, p, cfg) - i * apply_raw(VectorField::Y(j), f, p, cfg)),
        VectorField::ZBar(j) => {
            0.5 * (apply_raw(VectorField::X(j), f, p, cfg) + i * apply_raw(VectorField::Y(j), f, p, cfg))
        }
    }
}

fn check_stencil(f: &ScalarField, p: &HeisenbergPoint, reach: f64) -> Result<()> {
    for pole in &f.poles {
        if pole.dim() != p.dim() {
            continue;
        }
        let dist = pole
            .zeta
            .iter()
            .zip(&p.zeta)
            .map(|(a, b)| (a.re - b.re).abs().max((a.im - b.im).abs()))
            .fold((pole.t - p.t).abs(), f64::max);
        if dist <= reach {
            return Err(Error::StencilTouchesPole { point: p.to_string() });
        }
    }
    Ok(())
}

fn check_field_index(which: VectorField, p: &HeisenbergPoint) -> Result<()> {
    let j = match which {
        VectorField::X(j) | VectorField::Y(j) | VectorField::Z(j) | VectorField::ZBar(j) => j,
        VectorField::T => return Ok(()),
    };
    if j >= p.dim() {
        return Err(Error::InvalidArgument(format!("field index {j} out of range for n = {}", p.dim())));
    }
    Ok(())
}

pub fn apply_vector_field(
    which: VectorField,
    f: &ScalarField,
    p: &HeisenbergPoint,
    cfg: &StencilConfig,
) -> Result<Complex64> {
    check_field_index(which, p)?;
    check_stencil(f, p, cfg.reach())?;
    Ok(apply_raw(which, f.func(), p, cfg))
}

/// `(X_1 f, Y_1 f, ..., X_n f, Y_n f)`, real parts.
pub fn horizontal_gradient(f: &ScalarField, p: &HeisenbergPoint, cfg: &StencilConfig) -> Result<Vec<f64>> {
    check_stencil(f, p, cfg.reach())?;
    let mut grad = Vec::with_capacity(2 * p.dim());
    for j in 0..p.dim() {
        grad.push(apply_raw(VectorField::X(j), f.func(), p, cfg).re);
        grad.push(apply_raw(VectorField::Y(j), f.func(), p, cfg).re);
    }
    Ok(grad)
}

/// `-sum_j (X_j^2 + Y_j^2) f`, or `Delta_0 f = (1/4) sum_j (X_j^2 + Y_j^2) f`
/// when `normalized`. Each square is a nested application of the first-order
/// stencil. Returns the real part.
pub fn kohn_laplacian(f: &ScalarField, p: &HeisenbergPoint, cfg: &StencilConfig, normalized: bool) -> Result<f64> {
    check_stencil(f, p, 2.0 * cfg.reach())?;
    let func = f.func();
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..p.dim() {
        for which in [VectorField::X(j), VectorField::Y(j)] {
            let inner = move |q: &HeisenbergPoint| apply_raw(which, func, q, cfg);
            sum += apply_raw(which, &inner, p, cfg);
        }
    }
    let sublaplacian = sum.re;
    Ok(if normalized {
        0.25 * sublaplacian
    } else {
        -sublaplacian
    })
}

/// Value of the boundary normal operator, with a flag recording whether the
/// characteristic-point limit was used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalDerivative {
    pub value: f64,
    pub characteristic: bool,
}

/// `i (E - Ebar) f / |zeta|` at `(zeta, 0)` with `E = sum_j zeta_j Z_j`.
///
/// Within `h` of the characteristic point `zeta = 0` the value is taken on the
/// ring `|zeta| = 2h` (same direction, or along `x_1` when `zeta = 0`).
pub fn normal_derivative_boundary(f: &ScalarField, zeta: &[Complex64], cfg: &StencilConfig) -> Result<NormalDerivative> {
    if zeta.is_empty() {
        return Err(Error::InvalidArgument("empty zeta".into()));
    }
    let r = zeta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let (point, characteristic) = if r > cfg.h {
        (HeisenbergPoint::boundary(zeta.to_vec()), false)
    } else {
        let ring = 2.0 * cfg.h;
        let zeta = if r > 0.0 {
            zeta.iter().map(|z| z * (ring / r)).collect()
        } else {
            let mut z = vec![Complex64::new(0.0, 0.0); zeta.len()];
            z[0] = Complex64::new(ring, 0.0);
            z
        };
        (HeisenbergPoint::boundary(zeta), true)
    };
    check_stencil(f, &point, cfg.reach())?;
    let func = f.func();
    let mut e = Complex64::new(0.0, 0.0);
    let mut ebar = Complex64::new(0.0, 0.0);
    for (j, zj) in point.zeta.iter().enumerate() {
        e += zj * apply_raw(VectorField::Z(j), func, &point, cfg);
        ebar += zj.conj() * apply_raw(VectorField::ZBar(j), func, &point, cfg);
    }
    let value = (Complex64::i() * (e - ebar)).re / point.zeta_norm();
    Ok(NormalDerivative { value, characteristic })
}

/// Trapezoid approximation of `(1/2 pi) int f(e^{i theta} zeta, t) d theta`.
pub fn circular_average(f: &ScalarField, n_theta: usize) -> Result<ScalarField> {
    if n_theta < 4 {
        return Err(Error::InvalidArgument(format!("n_theta must be >= 4, got {n_theta}")));
    }
    let inner = f.clone();
    let avg = ScalarField::new(format!("circular_average({})", f.name()), move |p| {
        let step = std::f64::consts::TAU / n_theta as f64;
        (0..n_theta).map(|m| inner.eval(&p.rotate(m as f64 * step))).sum::<Complex64>() / n_theta as f64
    });
    Ok(ScalarField {
        decay_exponent: f.decay_exponent,
        circular: true,
        poles: f.poles.clone(),
        ..avg
    })
}

/// Fixed-point test for circularity: `f` agrees with its circular average at
/// every sample to within `rel_tol` (relative to the largest sampled value).
pub fn is_circular(f: &ScalarField, samples: &[HeisenbergPoint], n_theta: usize, rel_tol: f64) -> Result<bool> {
    let avg = circular_average(f, n_theta)?;
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    for p in samples {
        let v = f.eval(p);
        scale = scale.max(v.norm());
        worst = worst.max((v - avg.eval(p)).norm());
    }
    Ok(worst <= rel_tol * scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::close;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_is_neutral() {
        let q = HeisenbergPoint::h1(0.3, -1.2, 2.5);
        assert_eq!(group_mul(&HeisenbergPoint::identity(1), &q).unwrap(), q);
    }

    #[test]
    fn product_of_one_and_i() {
        let p = HeisenbergPoint::h1(1.0, 0.0, 0.0);
        let q = HeisenbergPoint::h1(0.0, 1.0, 0.0);
        let r = group_mul(&p, &q).unwrap();
        assert_eq!(r.zeta[0], c(1.0, 1.0));
        assert_eq!(r.t, -2.0);
    }

    #[test]
    fn inverse_negates() {
        let p = HeisenbergPoint::h1(0.0, 1.0, 3.0);
        assert_eq!(group_inverse(&p), HeisenbergPoint::h1(-0.0, -1.0, -3.0));
        let e = group_mul(&p, &group_inverse(&p)).unwrap();
        assert_eq!(e.t, 0.0);
        assert_eq!(e.zeta[0], c(0.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = HeisenbergPoint::identity(1);
        let q = HeisenbergPoint::identity(2);
        assert!(matches!(group_mul(&p, &q), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn gauge_special_cases() {
        assert_eq!(gauge_norm(&HeisenbergPoint::identity(2)), 0.0);
        assert!(close(gauge_norm(&HeisenbergPoint::h1(0.6, 0.8, 0.0)), 1.0, 1e-15));
        assert!(close(gauge_norm(&HeisenbergPoint::h1(0.0, 0.0, -9.0)), 3.0, 1e-15));
    }

    #[test]
    fn dilation() {
        let p = HeisenbergPoint::h1(1.0, 0.0, 1.0);
        assert_eq!(dilate(1.0, &p).unwrap(), p);
        assert_eq!(dilate(2.0, &p).unwrap(), HeisenbergPoint::h1(2.0, 0.0, 4.0));
        assert!(dilate(0.0, &p).is_err());
        assert!(dilate(-1.0, &p).is_err());
    }

    #[test]
    fn x_of_linear_and_vertical_fields() {
        let cfg = StencilConfig::new(1e-3, 2).unwrap();
        let x1 = ScalarField::real("x1", |p| p.zeta[0].re);
        let t = ScalarField::real("t", |p| p.t);
        let p = HeisenbergPoint::h1(0.4, 3.0, -1.0);
        assert!(close(apply_vector_field(VectorField::X(0), &x1, &p, &cfg).unwrap().re, 1.0, 1e-10));
        assert!(close(apply_vector_field(VectorField::X(0), &t, &p, &cfg).unwrap().re, 6.0, 1e-9));
    }

    #[test]
    fn gradient_of_t() {
        let cfg = StencilConfig::new(1e-4, 2).unwrap();
        let t = ScalarField::real("t", |p| p.t);
        let g = horizontal_gradient(&t, &HeisenbergPoint::h1(0.7, -0.2, 0.0), &cfg).unwrap();
        assert!(close(g[0], -0.4, 1e-9));
        assert!(close(g[1], -1.4, 1e-9));
        let one = ScalarField::constant(3.0);
        let g = horizontal_gradient(&one, &HeisenbergPoint::h1(0.7, -0.2, 0.5), &cfg).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn normal_derivative_closed_forms() {
        let cfg = StencilConfig::new(1e-4, 2).unwrap();
        let r2 = ScalarField::real("|z|^2", |p| p.zeta_norm_sqr());
        let t = ScalarField::real("t", |p| p.t);
        let z = [c(0.6, -0.3)];
        let abs = (0.45f64).sqrt();
        let d = normal_derivative_boundary(&r2, &z, &cfg).unwrap();
        assert!(!d.characteristic);
        assert!(close(d.value, 0.0, 1e-8));
        let d = normal_derivative_boundary(&t, &z, &cfg).unwrap();
        assert!(close(d.value, -2.0 * abs, 1e-8));
        let d = normal_derivative_boundary(&ScalarField::constant(2.0), &z, &cfg).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn characteristic_point_uses_ring() {
        let cfg = StencilConfig::new(1e-3, 2).unwrap();
        let t = ScalarField::real("t", |p| p.t);
        let d = normal_derivative_boundary(&t, &[c(0.0, 0.0)], &cfg).unwrap();
        assert!(d.characteristic);
        // -2|zeta| on the ring |zeta| = 2h
        assert!(close(d.value, -4e-3, 1e-9));
    }

    #[test]
    fn stencil_touching_pole_is_an_error() {
        let cfg = StencilConfig::new(1e-2, 2).unwrap();
        let pole = HeisenbergPoint::h1(0.0, 0.0, 1.0);
        let f = ScalarField::real("inv", |p| 1.0 / gauge_norm(&HeisenbergPoint::h1(p.zeta[0].re, p.zeta[0].im, p.t - 1.0)))
            .with_pole(pole);
        let near = HeisenbergPoint::h1(0.005, 0.0, 1.0);
        assert!(matches!(
            apply_vector_field(VectorField::X(0), &f, &near, &cfg),
            Err(Error::StencilTouchesPole { .. })
        ));
        let far = HeisenbergPoint::h1(0.5, 0.0, 1.0);
        assert!(apply_vector_field(VectorField::X(0), &f, &far, &cfg).is_ok());
    }

    #[test]
    fn circular_average_examples() {
        let re = ScalarField::real("Re z", |p| p.zeta[0].re);
        let avg = circular_average(&re, 16).unwrap();
        assert!(avg.eval_re(&HeisenbergPoint::h1(1.3, 0.2, 0.0)).abs() < 1e-14);
        let circ = ScalarField::real("|z|^2 + t", |p| p.zeta_norm_sqr() + p.t);
        let avg = circular_average(&circ, 8).unwrap();
        let p = HeisenbergPoint::h1(0.3, 0.9, -0.4);
        assert!(close(avg.eval_re(&p), circ.eval_re(&p), 1e-14));
        assert!(circular_average(&circ, 3).is_err());
        assert!(is_circular(&circ, &[p.clone()], 8, 1e-12).unwrap());
        assert!(!is_circular(&re, &[p], 8, 1e-12).unwrap());
    }
}
