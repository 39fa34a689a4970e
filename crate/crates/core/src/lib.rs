//! Layer potentials, boundary integral equations and the Neumann function
//! for the Kohn-Laplacian on the Heisenberg half-space `t > 0`.

pub mod bie;
pub mod error;
pub mod fields;
pub mod heisenberg;
pub mod kernels;
pub mod quadrature;
pub mod special;
pub mod verification;

pub use bie::{DensityVector, OperatorKind, OperatorMatrix, SolveOptions, SolveReport};
pub use error::{Error, Result};
pub use fields::FieldSpec;
pub use heisenberg::{HeisenbergPoint, ScalarField, StencilConfig, StencilOrder, VectorField};
pub use kernels::KernelContext;
pub use quadrature::{BoundaryQuadratureRule, VolumeQuadratureRule, VolumeResolution};
pub use special::{Hyp2F1Request, Hyp2F1Variant};
pub use verification::{CheckResult, VerificationReport, VerifyConfig};
