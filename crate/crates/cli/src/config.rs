//! Run configuration: a versioned JSON document.

use std::path::{Path, PathBuf};

use kohn_core::bie::InhomogeneousOptions;
use kohn_core::fields::parse_point;
use kohn_core::verification::{default_flux_grids, GridSpec, JumpConfig, VolumeSpec};
use kohn_core::{FieldSpec, HeisenbergPoint, SolveOptions, VerifyConfig, VolumeResolution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_boundary")]
    pub boundary: GridSpec,
    #[serde(default = "default_volume")]
    pub volume: VolumeSpec,
    #[serde(default)]
    pub calibration: CalibrationConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyConfig,
    /// Neumann data.
    #[serde(default)]
    pub g: DataSpec,
    /// Right-hand side of the inhomogeneous problem.
    #[serde(default = "zero_field")]
    pub f: FieldSpec,
    /// Evaluation points as `"x,y,t"` strings.
    #[serde(default)]
    pub points: Vec<String>,
    #[serde(default)]
    pub converge: SweepSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Rules of strictly increasing radius.
    pub grids: Vec<GridSpec>,
    /// Largest accepted spread between radius extrapolations.
    pub max_residual: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            grids: default_flux_grids(),
            max_residual: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_compat: f64,
    pub svd_rel_threshold: f64,
    pub inhomogeneous_compat: f64,
    pub circular_tol: f64,
    pub circular_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolveOptions::default();
        let i = InhomogeneousOptions::default();
        Self {
            tol_compat: s.tol_compat,
            svd_rel_threshold: s.svd_rel_threshold,
            inhomogeneous_compat: i.tol_compat,
            circular_tol: i.circular_tol,
            circular_samples: i.circular_samples,
        }
    }
}

impl Tolerances {
    pub fn solve(&self) -> SolveOptions {
        SolveOptions {
            tol_compat: self.tol_compat,
            svd_rel_threshold: self.svd_rel_threshold,
        }
    }

    pub fn inhomogeneous(&self) -> InhomogeneousOptions {
        InhomogeneousOptions {
            tol_compat: self.inhomogeneous_compat,
            circular_tol: self.circular_tol,
            circular_samples: self.circular_samples,
        }
    }
}

/// Boundary data: a named field or one value per boundary node read from a
/// CSV file with a `value` column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSpec {
    Field(FieldSpec),
    Samples { samples_file: PathBuf },
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec::Field(FieldSpec::Zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSpec {
    /// Plane flux of an interior pole against `-2`, one row per grid.
    Flux { pole: String, grids: Vec<GridSpec> },
    /// Interior approach of the double layer to its one-sided limit, one row per offset.
    Jump(JumpConfig),
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec::Flux {
            pole: "0,0,1".into(),
            grids: [8.0, 16.0, 32.0]
                .into_iter()
                .map(|r_max| GridSpec {
                    n_r: 120,
                    n_theta: 64,
                    r_max,
                    grading: 3.0,
                })
                .collect(),
        }
    }
}

fn default_n() -> usize {
    1
}

fn default_boundary() -> GridSpec {
    GridSpec {
        n_r: 16,
        n_theta: 24,
        r_max: 6.0,
        grading: 1.5,
    }
}

fn default_volume() -> VolumeSpec {
    VolumeSpec {
        r_vol: 3.0,
        t_vol: 5.0,
        resolution: VolumeResolution::default(),
    }
}

fn zero_field() -> FieldSpec {
    FieldSpec::Zero
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn stock() -> Self {
        serde_json::from_str(&format!(r#"{{"schema_version": {SCHEMA_VERSION}}}"#)).expect("stock config")
    }

    /// Reads and validates a config file. Relative sample paths resolve
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        if let DataSpec::Samples { samples_file } = &mut cfg.g {
            if samples_file.is_relative() {
                if let Some(dir) = path.parent() {
                    *samples_file = dir.join(&*samples_file);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.n == 0 {
            return fail("n must be >= 1".into());
        }
        let grids = std::iter::once(&self.boundary).chain(&self.calibration.grids);
        for g in grids {
            if g.n_r == 0 || g.n_theta == 0 || !(g.r_max > 0.0) || !(g.grading > 0.0) {
                return fail(format!("grid {g:?} must have positive sizes, radius and grading"));
            }
        }
        if !(self.volume.r_vol > 0.0 && self.volume.t_vol > 0.0) {
            return fail("R_vol and T_vol must be positive".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_compat", t.tol_compat),
            ("svd_rel_threshold", t.svd_rel_threshold),
            ("inhomogeneous_compat", t.inhomogeneous_compat),
            ("circular_tol", t.circular_tol),
            ("calibration.max_residual", self.calibration.max_residual),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if let DataSpec::Samples { samples_file } = &self.g {
            if !samples_file.is_file() {
                return fail(format!("samples file {} does not exist", samples_file.display()));
            }
        }
        self.points()?;
        Ok(())
    }

    pub fn points(&self) -> Result<Vec<HeisenbergPoint>, ConfigError> {
        parse_points(self.points.iter().map(String::as_str))
    }

    /// SHA-256 of the canonical serialization, as lowercase hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_points<'a>(lines: impl Iterator<Item = &'a str>) -> Result<Vec<HeisenbergPoint>, ConfigError> {
    lines
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_point(l).map_err(|e| ConfigError(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stock_config_is_valid_and_hash_is_stable() {
        let cfg = RunConfig::stock();
        cfg.validate().unwrap();
        assert_eq!(cfg.hash(), RunConfig::stock().hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn hash_tracks_content() {
        let mut cfg = RunConfig::stock();
        cfg.boundary.n_r += 1;
        assert_ne!(cfg.hash(), RunConfig::stock().hash());
    }

    #[test]
    fn unknown_fields_and_versions_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"schema_version": 1, "bogus": 3}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"n": 1}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"schema_version": 2}"#).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn data_spec_forms() {
        let g: DataSpec = serde_json::from_str(r#"{"kind": "angular_mode", "m": 2}"#).unwrap();
        assert_eq!(g, DataSpec::Field(FieldSpec::AngularMode { m: 2, scale: 1.0 }));
        let g: DataSpec = serde_json::from_str(r#"{"samples_file": "g.csv"}"#).unwrap();
        assert_eq!(g, DataSpec::Samples { samples_file: "g.csv".into() });
    }

    #[test]
    fn sweep_specs() {
        let s: SweepSpec = serde_json::from_str(r#"{"study": "flux", "pole": "0,0,2", "grids": [{"n_r": 8, "n_theta": 8, "R": 4}]}"#).unwrap();
        assert!(matches!(s, SweepSpec::Flux { ref grids, .. } if grids.len() == 1 && grids[0].grading == 3.0));
        let s: SweepSpec = serde_json::from_str(
            r#"{"study": "jump", "psi": {"kind": "gaussian"}, "beta": [1, 0], "h_sequence": [0.04, 0.02]}"#,
        )
        .unwrap();
        assert!(matches!(s, SweepSpec::Jump(_)));
    }

    #[test]
    fn point_lists() {
        let pts = parse_points("# header\n0.5,0,1\n\n1,2,3\n".lines()).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(parse_points(["1,2"].into_iter()).is_err());
    }
}
