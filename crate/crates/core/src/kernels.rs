//! Closed-form kernels: the fundamental solution, `Psi = 2g`, its boundary
//! normal derivative, the circular average `gbar` and the reflected Neumann
//! function.
//!
//! With `beta = (zeta', t')` the pole and `alpha = (zeta, t)` the variable,
//!
//! ```text
//! C = |zeta|^2 + |zeta'|^2 + i (t' - t),   Q = 2 zeta . conj(zeta'),   |C - Q| = |beta^{-1} alpha|^2.
//! ```
//!
//! Every `dperp_*` function differentiates in `alpha`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{check_dims, hermitian, HeisenbergPoint};
use crate::special::{hyp2f1_family, Hyp2F1Variant, Z_MAX};

/// Dimension and normalization shared by all kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelContext {
    pub n: usize,
    pub c_fund: f64,
    pub a0: f64,
    pub calibrated: bool,
}

impl KernelContext {
    /// Unit constant, marked uncalibrated. Useful for shape checks and for
    /// the calibration run itself.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 1.0, false)
    }

    /// Context with a known constant (normally produced by calibration).
    pub fn calibrated(n: usize, c_fund: f64) -> Result<Self> {
        Self::new(n, c_fund, true)
    }

    fn new(n: usize, c_fund: f64, calibrated: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        if !(c_fund > 0.0 && c_fund.is_finite()) {
            return Err(Error::InvalidArgument(format!("c_fund must be positive, got {c_fund}")));
        }
        Ok(Self {
            n,
            c_fund,
            a0: c_fund,
            calibrated,
        })
    }

    pub fn require_calibrated(&self) -> Result<()> {
        if self.calibrated {
            Ok(())
        } else {
            Err(Error::Uncalibrated)
        }
    }

    fn check(&self, p: &HeisenbergPoint) -> Result<()> {
        if p.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqPair {
    pub c: Complex64,
    pub q: Complex64,
}

impl CqPair {
    pub fn a(&self) -> Complex64 {
        self.c - self.q
    }

    /// `|Q|^2 / |C|^2`, equal to one only on the circular diagonal.
    pub fn z(&self) -> f64 {
        let cn = self.c.norm_sqr();
        if cn == 0.0 {
            1.0
        } else {
            (self.q.norm_sqr() / cn).min(1.0)
        }
    }
}

pub fn cq(beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<CqPair> {
    check_dims(beta, alpha)?;
    let c = Complex64::new(alpha.zeta_norm_sqr() + beta.zeta_norm_sqr(), beta.t - alpha.t);
    let q = 2.0 * hermitian(&alpha.zeta, &beta.zeta);
    Ok(CqPair { c, q })
}

fn pair(ctx: &KernelContext, beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<CqPair> {
    ctx.check(beta)?;
    ctx.check(alpha)?;
    cq(beta, alpha)
}

/// `c |beta^{-1} alpha|^{-2n}`, evaluated as `c |C - Q|^{-n}`.
pub fn fundamental_solution(ctx: &KernelContext, beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<f64> {
    let a = pair(ctx, beta, alpha)?.a().norm();
    if a == 0.0 {
        return Err(Error::Pole);
    }
    Ok(ctx.c_fund * a.powi(-(ctx.n as i32)))
}

pub fn psi(ctx: &KernelContext, beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<f64> {
    Ok(2.0 * fundamental_solution(ctx, beta, alpha)?)
}

/// `dperp Psi(beta, alpha)` in `alpha`, at any height `alpha.t`:
///
/// ```text
/// -(2 n c / |zeta|) |A|^{-(n+2)} [2 |zeta|^2 Im A + Im(conj(A) Q)],   A = C - Q.
/// ```
pub fn dperp_psi_at(ctx: &KernelContext, beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<f64> {
    let cqp = pair(ctx, beta, alpha)?;
    let r2 = alpha.zeta_norm_sqr();
    if r2 == 0.0 {
        return Err(Error::CharacteristicPoint);
    }
    let a = cqp.a();
    let an = a.norm();
    if an == 0.0 {
        return Err(Error::Pole);
    }
    let n = ctx.n as f64;
    let bracket = 2.0 * r2 * a.im + (a.conj() * cqp.q).im;
    Ok(-(2.0 * n * ctx.c_fund / r2.sqrt()) * an.powi(-(ctx.n as i32 + 2)) * bracket)
}

/// `dperp Psi(beta, alpha)` for `alpha = (zeta, 0)` on the boundary.
pub fn dperp_psi(ctx: &KernelContext, beta: &HeisenbergPoint, alpha_zeta: &[Complex64]) -> Result<f64> {
    dperp_psi_at(ctx, beta, &HeisenbergPoint::boundary(alpha_zeta.to_vec()))
}

fn checked_z(cqp: &CqPair) -> Result<f64> {
    if cqp.c.norm() == 0.0 {
        return Err(Error::Pole);
    }
    let z = cqp.z();
    if z > Z_MAX {
        return Err(Error::DiagonalSingularity(z));
    }
    Ok(z)
}

/// Circular average of the fundamental solution over the phase of the pole:
/// `a0 |C|^{-n} 2F1(n/2, n/2; 1; |Q|^2 / |C|^2)`.
pub fn gbar(ctx: &KernelContext, beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<f64> {
    let cqp = pair(ctx, beta, alpha)?;
    let z = checked_z(&cqp)?;
    let f = hyp2f1_family(ctx.n, Hyp2F1Variant::Average, z)?;
    Ok(ctx.a0 * cqp.c.norm().powi(-(ctx.n as i32)) * f)
}

/// `dperp gbar` in `alpha` at any height. `gbar` is circular, so only the
/// `-2 |zeta| d/dt` part of the operator survives:
/// `2 n |zeta| a0 (t - t') |C|^{-(n+2)} 2F1(n/2 + 1, n/2; 1; z)`.
pub fn dperp_gbar_at(ctx: &KernelContext, beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<f64> {
    let cqp = pair(ctx, beta, alpha)?;
    let z = checked_z(&cqp)?;
    let dt = alpha.t - beta.t;
    if dt == 0.0 {
        return Ok(0.0);
    }
    let n = ctx.n as f64;
    let f = hyp2f1_family(ctx.n, Hyp2F1Variant::NormalDerivative, z)?;
    Ok(2.0 * n * alpha.zeta_norm() * ctx.a0 * dt * cqp.c.norm().powi(-(ctx.n as i32 + 2)) * f)
}

pub fn dperp_gbar(ctx: &KernelContext, beta: &HeisenbergPoint, alpha_zeta: &[Complex64]) -> Result<f64> {
    dperp_gbar_at(ctx, beta, &HeisenbergPoint::boundary(alpha_zeta.to_vec()))
}

/// `(zeta', t') -> (zeta', -t')`.
pub fn reflect(beta: &HeisenbergPoint) -> HeisenbergPoint {
    HeisenbergPoint {
        zeta: beta.zeta.clone(),
        t: -beta.t,
    }
}

/// `G(beta, alpha) = gbar(beta, alpha) + gbar(beta*, alpha)`.
pub fn neumann_function(ctx: &KernelContext, beta: &HeisenbergPoint, alpha: &HeisenbergPoint) -> Result<f64> {
    if beta.t == 0.0 {
        return Ok(2.0 * gbar(ctx, beta, alpha)?);
    }
    Ok(gbar(ctx, beta, alpha)? + gbar(ctx, &reflect(beta), alpha)?)
}

pub fn dperp_neumann_function(ctx: &KernelContext, beta: &HeisenbergPoint, alpha_zeta: &[Complex64]) -> Result<f64> {
    Ok(dperp_gbar(ctx, beta, alpha_zeta)? + dperp_gbar(ctx, &reflect(beta), alpha_zeta)?)
}
