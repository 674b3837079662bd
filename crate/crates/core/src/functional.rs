//! The mean-square error between the Rosenblatt sheet and its two-term
//! approximation, as an explicit function of (t, s) and the coefficients.
//!
//! With a = a(k₂), b = b(k₂) and w = (1-α)²(1-β)²,
//!
//! ```text
//! f(t, s) = a t^(2α) s^(2β) - 8 k₁ b t s + 4 k₁² t^(2-2α) s^(2-2β) / w
//! ```
//!
//! Everything on the boundary t = T is expressed through the variable
//! x = k₁ s^(1-2β), in which ∂f/∂s(T, s) = (2k₁/x) F(x) with F quadratic.
//! The boundary s = S is handled by transposing the problem.

use crate::constants::{a_coeff, b_coeff, KernelConstants};
use crate::error::{invalid, Error, Result};
use crate::special::HurstIndex;

/// Hurst indices and the rectangle [0, T] × [0, S].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: HurstIndex,
    pub beta: HurstIndex,
    pub horizon_t: f64,
    pub horizon_s: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, horizon_t: f64, horizon_s: f64) -> Result<Self> {
        let alpha = HurstIndex::new(alpha)?;
        let beta = HurstIndex::new(beta)?;
        for (name, v) in [("T", horizon_t), ("S", horizon_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("horizon {name} must be positive and finite, got {v}"));
            }
        }
        Ok(Self { alpha, beta, horizon_t, horizon_s })
    }

    /// Exchanges the two time axes.
    pub fn transposed(&self) -> Self {
        Self { alpha: self.beta, beta: self.alpha, horizon_t: self.horizon_s, horizon_s: self.horizon_t }
    }

    /// T^(2α) S^(2β), the variance of the sheet at the far corner.
    pub fn corner_variance(&self) -> f64 {
        self.horizon_t.powf(2.0 * self.alpha.value()) * self.horizon_s.powf(2.0 * self.beta.value())
    }
}

/// Non-negative weights of the two approximating integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub k1: f64,
    pub k2: f64,
}

impl Coefficients {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        if !(k1 >= 0.0 && k2 >= 0.0 && k1.is_finite() && k2.is_finite()) {
            return invalid(format!("coefficients must be finite and non-negative, got ({k1}, {k2})"));
        }
        Ok(Self { k1, k2 })
    }

    pub const ZERO: Self = Self { k1: 0.0, k2: 0.0 };
}

/// f without sign restrictions on the coefficients.
pub(crate) fn f_raw(kc: &KernelConstants, t: f64, s: f64, k1: f64, k2: f64) -> f64 {
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    let a = a_coeff(k2, kc);
    let b = b_coeff(k2, kc);
    let mut v = a * t.powf(2.0 * al) * s.powf(2.0 * be);
    if k1 != 0.0 {
        v += -8.0 * k1 * b * t * s + 4.0 * k1 * k1 * t.powf(2.0 - 2.0 * al) * s.powf(2.0 - 2.0 * be) / kc.w;
    }
    v
}

/// Mean-square error E[(Z_{t,s} - M_{t,s})²] of the approximation.
pub fn f_eval(kc: &KernelConstants, t: f64, s: f64, c: &Coefficients) -> f64 {
    f_raw(kc, t, s, c.k1, c.k2)
}

/// (∂f/∂t, ∂f/∂s).
pub fn f_partials(kc: &KernelConstants, t: f64, s: f64, c: &Coefficients) -> (f64, f64) {
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    let a = a_coeff(c.k2, kc);
    let b = b_coeff(c.k2, kc);
    let q = 4.0 * c.k1 * c.k1 / kc.w;
    let dt = 2.0 * al * a * t.powf(2.0 * al - 1.0) * s.powf(2.0 * be) - 8.0 * c.k1 * b * s
        + q * (2.0 - 2.0 * al) * t.powf(1.0 - 2.0 * al) * s.powf(2.0 - 2.0 * be);
    let ds = 2.0 * be * a * t.powf(2.0 * al) * s.powf(2.0 * be - 1.0) - 8.0 * c.k1 * b * t
        + q * (2.0 - 2.0 * be) * t.powf(2.0 - 2.0 * al) * s.powf(1.0 - 2.0 * be);
    (dt, ds)
}

/// (∂f/∂k₁, ∂f/∂k₂) at a fixed point (t, s).
pub fn coefficient_gradient(kc: &KernelConstants, t: f64, s: f64, k1: f64, k2: f64) -> (f64, f64) {
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    let ab = kc.ab();
    let b = b_coeff(k2, kc);
    let tp = t.powf(2.0 * al) * s.powf(2.0 * be);
    let d1 = -8.0 * b * t * s + 8.0 * k1 * t.powf(2.0 - 2.0 * al) * s.powf(2.0 - 2.0 * be) / kc.w;
    let d2 = (8.0 * k2 * kc.beta_ab - 8.0 * kc.c2c2()) / ab * tp + 32.0 * k1 * kc.beta_sum * t * s;
    (d1, d2)
}

/// Discriminant of F on the boundary t = T:
/// 16T²(b² - βa / ((1-α)²(1-β))).
pub fn discriminant(kc: &KernelConstants, k2: f64, horizon_t: f64) -> f64 {
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    let a = a_coeff(k2, kc);
    let b = b_coeff(k2, kc);
    16.0 * horizon_t * horizon_t * (b * b - be * a / ((1.0 - al).powi(2) * (1.0 - be)))
}

/// Roots x₁ > x₂ > 0 of F on t = T, for a given k₂.
///
/// Only exist when the discriminant is positive and b(k₂) > 0.
pub fn x_roots(kc: &KernelConstants, k2: f64, horizon_t: f64) -> Result<(f64, f64)> {
    let al = kc.alpha.value();
    let be = kc.beta.value();
    let delta = discriminant(kc, k2, horizon_t);
    let b = b_coeff(k2, kc);
    if !(delta > 0.0) {
        return Err(Error::Branch(format!("discriminant {delta:e} is not positive")));
    }
    if !(b > 0.0) {
        return Err(Error::Branch(format!("b(k2) = {b:e} is not positive")));
    }
    let scale = (1.0 - al).powi(2) * (1.0 - be) / (8.0 * horizon_t.powf(2.0 - 2.0 * al));
    let sq = delta.sqrt();
    let lead = 4.0 * b * horizon_t;
    let x1 = scale * (lead + sq);
    // product of the roots is βaT^(2α) / (4T^(2-2α)/((1-α)²(1-β)))
    let prod = be * a_coeff(k2, kc) * horizon_t.powf(2.0 * al) * (1.0 - al).powi(2) * (1.0 - be)
        / (4.0 * horizon_t.powf(2.0 - 2.0 * al));
    let x2 = prod / x1;
    Ok((x1, x2))
}

/// Critical points of s ↦ f(T, s) and the discriminant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRoots {
    pub x1: f64,
    pub x2: f64,
    /// Local maximum of f(T, ·).
    pub s1: f64,
    /// Local minimum of f(T, ·).
    pub s2: f64,
    pub delta: f64,
}

/// Requires Δ > 0, b(k₂) > 0 and k₁ > 0.
pub fn boundary_roots(kc: &KernelConstants, horizon_t: f64, c: &Coefficients) -> Result<BoundaryRoots> {
    if !(c.k1 > 0.0) {
        return Err(Error::Branch("boundary critical points need k1 > 0".into()));
    }
    let (x1, x2) = x_roots(kc, c.k2, horizon_t)?;
    let e = 1.0 / (2.0 * kc.beta.value() - 1.0);
    Ok(BoundaryRoots {
        x1,
        x2,
        s1: (c.k1 / x1).powf(e),
        s2: (c.k1 / x2).powf(e),
        delta: discriminant(kc, c.k2, horizon_t),
    })
}

/// f(T, s₁) - f(T, S): the excess of the interior boundary maximum over the
/// corner value.
pub fn h_gap(p: &ModelParams, kc: &KernelConstants, c: &Coefficients) -> Result<f64> {
    let r = boundary_roots(kc, p.horizon_t, c)?;
    Ok(f_eval(kc, p.horizon_t, r.s1, c) - f_eval(kc, p.horizon_t, p.horizon_s, c))
}

/// φ(x) = x^(2β/(2β-1)) (β/x + β - 1) - β - βx + 1 on (0, 1), where x is the
/// ratio x₂/x₁ of the boundary roots. Decreases from 1 - β to 0.
pub fn phi(beta: f64, x: f64) -> f64 {
    x.powf(2.0 * beta / (2.0 * beta - 1.0)) * (beta / x + beta - 1.0) - beta - beta * x + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::QuadratureConfig;

    fn kc(a: f64, b: f64) -> KernelConstants {
        KernelConstants::new(HurstIndex::new(a).unwrap(), HurstIndex::new(b).unwrap(), &QuadratureConfig::default())
            .unwrap()
    }

    #[test]
    fn zero_coefficients_give_variance() {
        let k = kc(0.7, 0.8);
        let v = f_eval(&k, 0.5, 2.0, &Coefficients::ZERO);
        assert!((v / (0.5f64.powf(1.4) * 2f64.powf(1.6)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn transposition_symmetry() {
        let k = kc(0.6, 0.9);
        let c = Coefficients::new(0.01, 0.02).unwrap();
        let a = f_eval(&k, 0.3, 0.8, &c);
        let b = f_eval(&k.transposed(), 0.8, 0.3, &c);
        assert!((a - b).abs() < 1e-14 * a.abs().max(1.0));
    }

    #[test]
    fn roots_are_zeros_of_f_s() {
        let k = kc(0.9, 0.9);
        let c = Coefficients::new(0.02, 0.0).unwrap();
        let (x1, x2) = x_roots(&k, c.k2, 1.0).unwrap();
        for x in [x1, x2] {
            let s = (c.k1 / x).powf(1.0 / 0.8);
            let (_, ds) = f_partials(&k, 1.0, s, &c);
            assert!(ds.abs() < 1e-10, "ds = {ds}");
        }
    }

    #[test]
    fn phi_at_one_is_zero() {
        assert!(phi(0.7, 1.0).abs() < 1e-15);
        assert!((phi(0.7, 1e-12) - 0.3).abs() < 1e-9);
        assert!(phi(0.7, 0.5) > 0.0);
    }

    #[test]
    fn bad_params_rejected() {
        assert!(ModelParams::new(0.7, 0.7, 0.0, 1.0).is_err());
        assert!(ModelParams::new(0.4, 0.7, 1.0, 1.0).is_err());
        assert!(Coefficients::new(-1e-3, 0.0).is_err());
    }
}
