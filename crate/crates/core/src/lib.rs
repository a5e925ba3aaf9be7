#![allow(clippy::needless_range_loop)]

//! Finite-dimensional distribution functions of the Airy process,
//!
//! ```text
//! Pr(A_{τ_1} < ξ_1, …, A_{τ_m} < ξ_m) = det(I − K),
//! ```
//!
//! computed two independent ways: as the Fredholm determinant of the
//! extended Airy kernel (Nyström discretization), and by integrating the
//! matrix differential system in the diagonal shift `ξ_j ↦ ξ_j + ξ`
//! satisfied by the resolvent quantities `q, q̃, r`.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`). The aliases
//! at the crate root fix the scalar to `f64`, the precision all tolerances
//! are calibrated for.

pub mod dist;
pub mod error;
pub mod fredholm;
pub mod kernel;
pub mod linalg;
pub mod num;
pub mod odesys;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
pub use num::Real;

pub type Matrix = linalg::Mat<f64>;
pub type QuadratureRule = quadrature::QuadratureRule<f64>;
pub type HalfLineMap = quadrature::HalfLineMap<f64>;
pub type TimeGrid = kernel::TimeGrid<f64>;
pub type ThresholdVector = kernel::ThresholdVector<f64>;
pub type KernelSpec = kernel::KernelSpec<f64>;
pub type DiscretizedOperator = fredholm::DiscretizedOperator<f64>;
pub type ResolventBundle = fredholm::ResolventBundle<f64>;
pub type AiryEval = specfun::AiryEval<f64>;
pub type SystemState = odesys::SystemState<f64>;
pub type DistributionResult = dist::DistributionResult<f64>;
pub type CdfOptions = dist::CdfOptions<f64>;
