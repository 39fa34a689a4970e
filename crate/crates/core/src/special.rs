//! Gamma, digamma and the Gauss hypergeometric function on `[0, 1)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-12;
pub const MAX_TERMS: usize = 100_000;
/// Largest admissible argument.
pub const Z_MAX: f64 = 1.0 - 1e-13;
/// `c - a - b` closer than this to an integer uses the logarithmic formulas.
const INTEGER_SNAP: f64 = 1e-9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

pub fn gamma(x: f64) -> f64 {
    if nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, coef) in LANCZOS.iter().enumerate().skip(1) {
        acc += coef / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// `1 / Gamma(x)`, zero at the poles of Gamma.
pub fn rgamma(x: f64) -> f64 {
    if nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

pub fn digamma(x: f64) -> f64 {
    if nonpositive_integer(x) {
        return f64::NAN;
    }
    if x < 0.0 {
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Bernoulli terms B_{2k} / (2k)
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
    acc + x.ln() - 0.5 / x - series
}

/// Pochhammer symbol `(x)_k`.
fn poch(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (x + j as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyp2F1Request {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
    pub rel_tol: f64,
}

impl Hyp2F1Request {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Self {
        Self {
            a,
            b,
            c,
            z,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("2F1 parameter {name} must be positive, got {v}")));
            }
        }
        if !(self.rel_tol >= f64::EPSILON) {
            return Err(Error::InvalidArgument(format!("rel_tol {} below machine epsilon", self.rel_tol)));
        }
        if !(0.0..=Z_MAX).contains(&self.z) {
            return Err(Error::HypergeometricDomain(self.z));
        }
        Ok(())
    }

    fn no_convergence(&self, terms: usize) -> Error {
        Error::HypergeometricNoConvergence {
            a: self.a,
            b: self.b,
            c: self.c,
            z: self.z,
            terms,
        }
    }
}

/// Sums `sum_k term_k` where `term_{k+1} = term_k * ratio(k)`, stopping once
/// the geometric tail bound drops below `tol / 10` of the running sum.
fn sum_ratio_series(first: f64, tol: f64, mut ratio: impl FnMut(usize) -> f64) -> Option<(f64, usize)> {
    let mut term = first;
    let mut sum = first;
    for k in 0..MAX_TERMS {
        let r = ratio(k);
        term *= r;
        sum += term;
        if term == 0.0 || (r.abs() < 0.9 && term.abs() * r.abs() / (1.0 - r.abs()) <= 0.1 * tol * sum.abs()) {
            return Some((sum, k + 1));
        }
    }
    None
}

fn series(a: f64, b: f64, c: f64, z: f64, tol: f64) -> Option<f64> {
    if z == 0.0 {
        return Some(1.0);
    }
    sum_ratio_series(1.0, tol, |k| {
        let k = k as f64;
        (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
    })
    .map(|(s, _)| s)
}

/// Logarithmic tail shared by the integer `c - a - b` formulas:
/// `sum_k (p)_k (q)_k / (k! (k+m)!) w^k [ln w - psi(k+1) - psi(k+m+1) + psi(p+k) + psi(q+k)]`.
fn log_tail(p: f64, q: f64, m: usize, w: f64, tol: f64) -> Option<f64> {
    let lnw = w.ln();
    let bracket = |k: usize| {
        let kf = k as f64;
        lnw - digamma(kf + 1.0) - digamma(kf + m as f64 + 1.0) + digamma(p + kf) + digamma(q + kf)
    };
    let mut coef = 1.0 / gamma(m as f64 + 1.0);
    let mut sum = coef * bracket(0);
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        coef *= (p + kf) * (q + kf) / ((kf + 1.0) * (kf + m as f64 + 1.0)) * w;
        let term = coef * bracket(k + 1);
        sum += term;
        if coef == 0.0 || (w < 0.9 && term.abs() * w / (1.0 - w) <= 0.1 * tol * sum.abs()) {
            return Some(sum);
        }
    }
    None
}

fn connection(req: &Hyp2F1Request) -> Result<f64> {
    let Hyp2F1Request { a, b, c, z, rel_tol } = *req;
    let w = 1.0 - z;
    let s = c - a - b;
    let m_round = s.round();
    let fail = || req.no_convergence(MAX_TERMS);
    if (s - m_round).abs() > INTEGER_SNAP {
        let t1 = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b);
        let t2 = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b);
        let f1 = if t1 == 0.0 {
            0.0
        } else {
            series(a, b, 1.0 - s, w, rel_tol).ok_or_else(fail)?
        };
        let f2 = if t2 == 0.0 {
            0.0
        } else {
            series(c - a, c - b, 1.0 + s, w, rel_tol).ok_or_else(fail)?
        };
        return Ok(t1 * f1 + w.powf(s) * t2 * f2);
    }
    if m_round >= 0.0 {
        // c = a + b + m
        let m = m_round as usize;
        let mut finite = 0.0;
        if m > 0 {
            let pre = gamma(m as f64) * gamma(a + b + m as f64) * rgamma(a + m as f64) * rgamma(b + m as f64);
            let mut acc = 0.0;
            for k in 0..m {
                acc += poch(a, k) * poch(b, k) / (gamma(k as f64 + 1.0) * poch(1.0 - m as f64, k)) * w.powi(k as i32);
            }
            finite = pre * acc;
        }
        let tail = log_tail(a + m as f64, b + m as f64, m, w, rel_tol).ok_or_else(fail)?;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        Ok(finite - sign * w.powi(m as i32) * gamma(a + b + m as f64) * rgamma(a) * rgamma(b) * tail)
    } else {
        // c = a + b - m
        let m = (-m_round) as usize;
        let mf = m as f64;
        let pre = gamma(mf) * gamma(a + b - mf) * rgamma(a) * rgamma(b) * w.powi(-(m as i32));
        let mut acc = 0.0;
        for k in 0..m {
            acc += poch(a - mf, k) * poch(b - mf, k) / (gamma(k as f64 + 1.0) * poch(1.0 - mf, k)) * w.powi(k as i32);
        }
        let weight = gamma(a + b - mf) * rgamma(a - mf) * rgamma(b - mf);
        let tail = if weight == 0.0 {
            0.0
        } else {
            log_tail(a, b, m, w, rel_tol).ok_or_else(fail)?
        };
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        Ok(pre * acc - sign * weight * tail)
    }
}

/// `2F1(a, b; c; z)` for positive parameters and `0 <= z <= 1 - 1e-13`.
///
/// Power series up to `z = 1/2`, transformation to `1 - z` beyond, with the
/// logarithmic forms when `c - a - b` is an integer.
pub fn hyp2f1(req: &Hyp2F1Request) -> Result<f64> {
    req.validate()?;
    let value = if req.z <= 0.5 {
        series(req.a, req.b, req.c, req.z, req.rel_tol).ok_or_else(|| req.no_convergence(MAX_TERMS))?
    } else {
        connection(req)?
    };
    if !value.is_finite() {
        return Err(Error::NonFinite(format!("2F1({}, {}; {}; {})", req.a, req.b, req.c, req.z)));
    }
    Ok(value)
}

/// The two parameter families used by the circular kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hyp2F1Variant {
    /// `2F1(n/2, n/2; 1; z)`: phase average of `|C - Q|^{-n}` is `|C|^{-n}` times this.
    Average,
    /// `2F1(n/2 + 1, n/2; 1; z)`: appears in the normal derivative of the average.
    NormalDerivative,
}

pub fn hyp2f1_family(n: usize, variant: Hyp2F1Variant, z: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let h = n as f64 / 2.0;
    let a = match variant {
        Hyp2F1Variant::Average => h,
        Hyp2F1Variant::NormalDerivative => h + 1.0,
    };
    hyp2f1(&Hyp2F1Request::new(a, h, 1.0, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_values() {
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-14);
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
    }

    #[test]
    fn digamma_values() {
        const EULER: f64 = 0.577_215_664_901_532_9;
        assert!((digamma(1.0) + EULER).abs() < 1e-14);
        assert!((digamma(0.5) + EULER + 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!(rel(digamma(-0.5), 0.036_489_973_978_576_52) < 1e-12);
    }

    #[test]
    fn z_zero_is_one() {
        assert_eq!(hyp2f1(&Hyp2F1Request::new(0.7, 2.5, 1.3, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn log_closed_form_at_half() {
        let v = hyp2f1(&Hyp2F1Request::new(1.0, 1.0, 2.0, 0.5)).unwrap();
        assert!(rel(v, 1.386_294_361_119_890_6) < 1e-13);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            hyp2f1(&Hyp2F1Request::new(1.0, 1.0, 2.0, 1.0)),
            Err(Error::HypergeometricDomain(_))
        ));
        assert!(hyp2f1(&Hyp2F1Request::new(1.0, 1.0, 2.0, -0.1)).is_err());
        assert!(hyp2f1(&Hyp2F1Request::new(1.0, 1.0, -2.0, 0.1)).is_err());
        assert!(hyp2f1(&Hyp2F1Request::new(1.0, 1.0, 2.0, 0.1).with_tol(1e-20)).is_err());
    }

    #[test]
    fn pole_case_c_minus_a_minus_b_is_minus_one() {
        // 2F1(a, b; a + b - 1; z) against direct summation at z = 0.7
        let (a, b, c, z) = (1.5, 0.5, 1.0, 0.7);
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..4000 {
            let k = k as f64;
            term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
            sum += term;
        }
        let v = hyp2f1(&Hyp2F1Request::new(a, b, c, z)).unwrap();
        assert!(rel(v, sum) < 1e-12, "{v} vs {sum}");
    }

    #[test]
    fn family_dispatch() {
        assert_eq!(hyp2f1_family(1, Hyp2F1Variant::Average, 0.0).unwrap(), 1.0);
        // (1, 1; 1; z) = 1 / (1 - z)
        let v = hyp2f1_family(2, Hyp2F1Variant::Average, 0.3).unwrap();
        assert!(rel(v, 1.0 / 0.7) < 1e-13);
        let v = hyp2f1_family(2, Hyp2F1Variant::Average, 0.8).unwrap();
        assert!(rel(v, 1.0 / 0.2) < 1e-12);
        let r = hyp2f1_family(1, Hyp2F1Variant::NormalDerivative, 0.99).unwrap()
            / hyp2f1_family(1, Hyp2F1Variant::NormalDerivative, 0.9).unwrap();
        assert!((r - 10.0).abs() < 2.5, "ratio {r}");
        assert!(hyp2f1_family(0, Hyp2F1Variant::Average, 0.1).is_err());
    }
}
