//! Jacobi trigonometric polynomial expansions, Jacobi-Poisson and potential
//! kernels, and the Riesz-Jacobi transforms evaluated both spectrally and as
//! singular integrals.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity, clippy::too_many_arguments)]

pub mod basis;
pub mod config;
pub mod error;
pub mod functions;
pub mod kernels;
pub mod params;
pub mod poisson;
pub mod quadrature;
pub mod reduction;
pub mod series;
pub mod tquad;
pub mod transforms;
pub mod verify;

pub use config::EvalConfig;
pub use error::{Error, Result};
pub use params::JacobiParams;
