//! Best approximation of the Rosenblatt sheet by a combination of two
//! double Wiener integrals.
//!
//! The sheet Z on [0, T] × [0, S] with Hurst indices (α, β) is approximated
//! by M = k₁ ζ₁ + k₂ ζ₂, where ζ₁ has the rank-one kernel
//! (y₁y₂)^(-α/2)(z₁z₂)^(-β/2) and ζ₂ the "max/min" kernel. The mean-square
//! error f(t, s) = E(Z - M)² is explicit (see [`functional`]), and
//! [`optimizer::solve`] picks (k₁, k₂) ≥ 0 minimising sup f over the
//! rectangle.
//!
//! Supporting modules compute the kernel constants ([`constants`]), check
//! the closed-form covariances against direct quadrature ([`oracle`]) and
//! estimate the error by Monte Carlo on a discretised white noise ([`sim`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod error;
pub mod functional;
pub mod optimizer;
pub mod oracle;
pub mod quad;
pub mod sim;
pub mod special;

pub use constants::KernelConstants;
pub use error::{Error, Result};
pub use functional::{Coefficients, ModelParams};
pub use optimizer::{solve, CaseTag, Solution};
pub use quad::QuadratureConfig;
