//! The constants coupling the approximating integrals to the Rosenblatt
//! kernel, and the two quadratic coefficients of the error functional.

use crate::error::{Error, Result};
use crate::quad::{power_product, tanh_sinh, tanh_sinh_try, QuadratureConfig};
use crate::special::{beta, c_kernel, d_norm, HurstIndex};

fn prefactor(h: HurstIndex) -> Result<f64> {
    let c = c_kernel(h.prime())?;
    Ok(d_norm(h) * c * c)
}

/// Covariance constant between the Rosenblatt kernel and the rank-one
/// kernel (y₁y₂)^(-H/2), per unit time:
/// d_H c²_{H'} B(1-H, H/2)².
pub fn c1(h: HurstIndex) -> Result<f64> {
    let a = h.value();
    let b = beta(1.0 - a, a / 2.0)?;
    Ok(prefactor(h)? * b * b)
}

/// The double integral ∫₀¹∫₀ˢ r^(-H)(1-s)^(H/2-1)(1-r)^(H/2-1)(s-r)^(H-1) dr ds,
/// evaluated after the substitution r = s·v, which removes the factor s.
///
/// Relative accuracy is `cfg.tol` for H in [0.55, 0.95] and degrades slowly
/// towards either end, where the integral diverges like 1/(2H-1) or 1/(1-H).
pub fn c2_core(h: HurstIndex, cfg: &QuadratureConfig) -> Result<f64> {
    let a = h.value();
    let inner_cfg = cfg.with_tol((cfg.tol * 0.1).max(1e-15))?;
    let outer = tanh_sinh_try(
        |_s, _, sigma| {
            // the inner near-singularity at ν ~ σ is unresolvable below this; the
            // outer integrand is O(σ^(2H-2)), so the neglected mass is O(1e-150^(2H-1))
            if sigma < 1e-150 {
                return Ok(0.0);
            }
            let inner = tanh_sinh(
                |_v, v, nu| {
                    let one_minus_sv = sigma + nu - sigma * nu;
                    power_product([(v, -a), (nu, a - 1.0), (one_minus_sv, a / 2.0 - 1.0)])
                },
                0.0,
                1.0,
                &inner_cfg,
            )?;
            Ok(power_product([(sigma, a / 2.0 - 1.0)]) * inner.value)
        },
        0.0,
        1.0,
        cfg,
    )?;
    Ok(outer.value)
}

/// Covariance constant between the Rosenblatt kernel and the kernel
/// max(y₁,y₂)^(H/2) min(y₁,y₂)^(-H/2) |y₁-y₂|^(H-1), per unit time^(2H).
pub fn c2(h: HurstIndex, cfg: &QuadratureConfig) -> Result<f64> {
    let v = prefactor(h)? * c2_core(h, cfg)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("c2"))
    }
}

/// Constants for a pair of Hurst indices (α, β), plus the Beta products
/// the error functional is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstants {
    pub alpha: HurstIndex,
    pub beta: HurstIndex,
    pub c1_alpha: f64,
    pub c1_beta: f64,
    pub c2_alpha: f64,
    pub c2_beta: f64,
    /// B(1-α, 2α-1) B(1-β, 2β-1).
    pub beta_ab: f64,
    /// B(1-α, α) B(1-β, β).
    pub beta_sum: f64,
    /// (1-α)²(1-β)².
    pub w: f64,
}

impl KernelConstants {
    pub fn new(alpha: HurstIndex, beta_h: HurstIndex, cfg: &QuadratureConfig) -> Result<Self> {
        let c2_alpha = c2(alpha, cfg)?;
        let c2_beta = if beta_h == alpha { c2_alpha } else { c2(beta_h, cfg)? };
        Self::from_parts(alpha, beta_h, c1(alpha)?, c1(beta_h)?, c2_alpha, c2_beta)
    }

    /// Assembles the derived products from already computed constants.
    pub fn from_parts(
        alpha: HurstIndex,
        beta_h: HurstIndex,
        c1_alpha: f64,
        c1_beta: f64,
        c2_alpha: f64,
        c2_beta: f64,
    ) -> Result<Self> {
        let (a, b) = (alpha.value(), beta_h.value());
        let beta_ab = beta(1.0 - a, 2.0 * a - 1.0)? * beta(1.0 - b, 2.0 * b - 1.0)?;
        let beta_sum = beta(1.0 - a, a)? * beta(1.0 - b, b)?;
        let w = (1.0 - a).powi(2) * (1.0 - b).powi(2);
        Ok(Self { alpha, beta: beta_h, c1_alpha, c1_beta, c2_alpha, c2_beta, beta_ab, beta_sum, w })
    }

    pub fn c1c1(&self) -> f64 {
        self.c1_alpha * self.c1_beta
    }

    pub fn c2c2(&self) -> f64 {
        self.c2_alpha * self.c2_beta
    }

    /// The same constants with the roles of the two time axes exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
            c1_alpha: self.c1_beta,
            c1_beta: self.c1_alpha,
            c2_alpha: self.c2_beta,
            c2_beta: self.c2_alpha,
            ..*self
        }
    }

    pub fn ab(&self) -> f64 {
        self.alpha.value() * self.beta.value()
    }
}

/// Coefficient of t^(2α) s^(2β) in the error functional:
/// 1 + 4k₂² B(1-α,2α-1)B(1-β,2β-1)/(αβ) - 8k₂ C₂(α)C₂(β)/(αβ).
pub fn a_coeff(k2: f64, kc: &KernelConstants) -> f64 {
    let ab = kc.ab();
    1.0 + 4.0 * k2 * k2 * kc.beta_ab / ab - 8.0 * k2 * kc.c2c2() / ab
}

/// Coefficient of -8k₁ts in the error functional:
/// C₁(α)C₁(β) - 4k₂ B(1-α,α)B(1-β,β).
pub fn b_coeff(k2: f64, kc: &KernelConstants) -> f64 {
    kc.c1c1() - 4.0 * k2 * kc.beta_sum
}
