//! Named test fields addressable from configuration files.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heisenberg::{gauge_norm, kohn_laplacian, normal_derivative_boundary, HeisenbergPoint, ScalarField, StencilConfig};

/// A field description. All fields are real valued.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|zeta|^2 / scale^2)`.
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `amplitude * exp(-(|zeta|^4 + (t - center_t)^2) / scale^4)`.
    GaugeGaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center_t: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `cos(m theta) exp(-|zeta|^2 / scale^2)` with `theta = arg zeta_1`.
    AngularMode {
        m: u32,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `exp(1 - 1 / (1 - (p / radius)^4))` inside the gauge ball, zero outside.
    Bump {
        radius: f64,
        #[serde(default)]
        center_t: f64,
    },
    /// `Delta_0` of the inner field by nested central differences.
    LaplacianOf {
        inner: Box<FieldSpec>,
        #[serde(default = "default_step")]
        h: f64,
    },
    /// `dperp` of the inner field at `(zeta, 0)`, ignoring the `t` argument.
    NormalDerivativeOf {
        inner: Box<FieldSpec>,
        #[serde(default = "default_step")]
        h: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_step() -> f64 {
    1e-3
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

impl FieldSpec {
    pub fn build(&self) -> Result<ScalarField> {
        Ok(match self.clone() {
            FieldSpec::Zero => ScalarField::zero(),
            FieldSpec::Constant { value } => ScalarField::constant(value),
            FieldSpec::Gaussian { amplitude, scale } => {
                positive("scale", scale)?;
                ScalarField::real(format!("gaussian({amplitude}, {scale})"), move |p| {
                    amplitude * (-p.zeta_norm_sqr() / (scale * scale)).exp()
                })
                .with_circular(true)
                .with_decay(f64::INFINITY)
            }
            FieldSpec::GaugeGaussian {
                amplitude,
                center_t,
                scale,
            } => {
                positive("scale", scale)?;
                let s4 = scale.powi(4);
                ScalarField::real(format!("gauge_gaussian({amplitude}, {center_t}, {scale})"), move |p| {
                    let r2 = p.zeta_norm_sqr();
                    let dt = p.t - center_t;
                    amplitude * (-(r2 * r2 + dt * dt) / s4).exp()
                })
                .with_circular(true)
                .with_decay(f64::INFINITY)
            }
            FieldSpec::AngularMode { m, scale } => {
                positive("scale", scale)?;
                ScalarField::real(format!("angular_mode({m}, {scale})"), move |p| {
                    let z = p.zeta[0];
                    (m as f64 * z.arg()).cos() * (-p.zeta_norm_sqr() / (scale * scale)).exp()
                })
                .with_circular(m == 0)
                .with_decay(f64::INFINITY)
            }
            FieldSpec::Bump { radius, center_t } => {
                positive("radius", radius)?;
                ScalarField::real(format!("bump({radius}, {center_t})"), move |p| {
                    let shifted = HeisenbergPoint {
                        zeta: p.zeta.clone(),
                        t: p.t - center_t,
                    };
                    let x = (gauge_norm(&shifted) / radius).powi(4);
                    if x >= 1.0 {
                        0.0
                    } else {
                        (1.0 - 1.0 / (1.0 - x)).exp()
                    }
                })
                .with_circular(true)
                .with_decay(f64::INFINITY)
            }
            FieldSpec::LaplacianOf { inner, h } => {
                let u = inner.build()?;
                let cfg = StencilConfig::new(h, 2)?;
                let circular = u.circular;
                ScalarField::real(format!("laplacian({})", u.name()), move |p| {
                    kohn_laplacian(&u, p, &cfg, true).unwrap_or(f64::NAN)
                })
                .with_circular(circular)
                .with_decay(f64::INFINITY)
            }
            FieldSpec::NormalDerivativeOf { inner, h } => {
                let u = inner.build()?;
                let cfg = StencilConfig::new(h, 2)?;
                let circular = u.circular;
                ScalarField::real(format!("dperp({})", u.name()), move |p| {
                    normal_derivative_boundary(&u, &p.zeta, &cfg).map(|d| d.value).unwrap_or(f64::NAN)
                })
                .with_circular(circular)
                .with_decay(f64::INFINITY)
            }
        })
    }
}

/// Parses `"x,y,t"` (n = 1) or `"x1,y1,...,xn,yn,t"` into a point.
pub fn parse_point(s: &str) -> Result<HeisenbergPoint> {
    let vals = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| Error::InvalidArgument(format!("bad point `{s}`: {e}")))?;
    if vals.len() < 3 || vals.len() % 2 == 0 {
        return Err(Error::InvalidArgument(format!("point `{s}` needs 2n + 1 coordinates")));
    }
    let (zeta, t) = vals.split_at(vals.len() - 1);
    HeisenbergPoint::new(zeta.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(), t[0])
}
