//! Minimax choice of the coefficients (k₁, k₂).
//!
//! The objective is the largest mean-square error over the rectangle,
//! which is attained on the edges t = T or s = S. On t = T the profile
//! s ↦ f(T, s) either increases monotonically (corner value wins) or has an
//! interior local maximum at s₁ = (k₁/x₁)^(1/(2β-1)). The edge s = S is the
//! same problem with the axes exchanged.
//!
//! For fixed k₂ the corner value is a convex quadratic in k₁, and the
//! interior edge maximum exceeds it exactly on an interval (k₁', k̄₁) whose
//! left end solves h(k₁) = 0. The best k₁ is therefore the vertex of the
//! quadratic or an endpoint of such an interval, on either edge. The outer
//! problem in k₂ is one-dimensional and solved by a dense scan followed by
//! golden-section refinement.

use crate::constants::{a_coeff, b_coeff, KernelConstants};
use crate::error::{Error, Result};
use crate::functional::{discriminant, f_raw, x_roots, Coefficients, ModelParams};

const K2_SCAN: usize = 800;
const GOLDEN_ITERS: usize = 100;
const BISECT_MAX: usize = 200;
const BISECT_REL_TOL: f64 = 1e-12;

/// How the solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseTag {
    /// Stationary point of the corner error; the edge profiles are monotone.
    DeltaNonPositive,
    /// Interior maximum on t = T is active or the discriminant there is positive.
    DeltaPositiveBoundaryT,
    /// Interior maximum on s = S is active.
    DeltaPositiveBoundaryS,
    /// Coefficient class k₂ = 0.
    SpecialK1Only,
    /// Coefficient class k₁ = 0.
    SpecialK2Only,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::DeltaNonPositive => "delta-nonpositive",
            CaseTag::DeltaPositiveBoundaryT => "delta-positive-boundary-t",
            CaseTag::DeltaPositiveBoundaryS => "delta-positive-boundary-s",
            CaseTag::SpecialK1Only => "special-k1-only",
            CaseTag::SpecialK2Only => "special-k2-only",
        }
    }
}

/// Which part of the boundary carries the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Active {
    Corner,
    EdgeT,
    EdgeS,
}

/// Supremum of f over the rectangle for given coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySup {
    pub value: f64,
    pub corner: f64,
    /// (s₁, f(T, s₁)) when the interior maximum on t = T lies below S.
    pub edge_t: Option<(f64, f64)>,
    /// (t₁, f(t₁, S)) when the interior maximum on s = S lies below T.
    pub edge_s: Option<(f64, f64)>,
    pub active: Active,
}

fn edge_max(p: &ModelParams, kc: &KernelConstants, k1: f64, k2: f64) -> Option<(f64, f64)> {
    if !(k1 > 0.0) {
        return None;
    }
    let (x1, _) = x_roots(kc, k2, p.horizon_t).ok()?;
    let s1 = (k1 / x1).powf(1.0 / (2.0 * kc.beta.value() - 1.0));
    (s1 < p.horizon_s).then(|| (s1, f_raw(kc, p.horizon_t, s1, k1, k2)))
}

/// Exact supremum of f over [0, T] × [0, S].
pub fn boundary_sup(p: &ModelParams, kc: &KernelConstants, k1: f64, k2: f64) -> BoundarySup {
    let corner = f_raw(kc, p.horizon_t, p.horizon_s, k1, k2);
    let edge_t = edge_max(p, kc, k1, k2);
    let edge_s = edge_max(&p.transposed(), &kc.transposed(), k1, k2);
    let mut value = corner;
    let mut active = Active::Corner;
    if let Some((_, v)) = edge_t {
        if v > value {
            value = v;
            active = Active::EdgeT;
        }
    }
    if let Some((_, v)) = edge_s {
        if v > value {
            value = v;
            active = Active::EdgeS;
        }
    }
    BoundarySup { value, corner, edge_t, edge_s, active }
}

/// Unconstrained stationary point (k₁*, k₂*) of the corner error
/// f(T, S; k₁, k₂). k₂* does not depend on the horizons.
pub fn solve_closed_form(p: &ModelParams, kc: &KernelConstants) -> Result<(f64, f64)> {
    let ab = kc.ab();
    let den = kc.beta_ab - 16.0 * ab * kc.w * kc.beta_sum * kc.beta_sum;
    if !(den > 0.0) {
        return Err(Error::Branch(format!("corner error is not strictly convex (det factor {den:e})")));
    }
    let k2 = (kc.c2c2() - 4.0 * ab * kc.w * kc.beta_sum * kc.c1c1()) / den;
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    let scale = p.horizon_t.powf(2.0 * al - 1.0) * p.horizon_s.powf(2.0 * be - 1.0);
    let k1 = kc.w * (kc.beta_ab * kc.c1c1() - 4.0 * kc.beta_sum * kc.c2c2()) / den * scale;
    if !(k1.is_finite() && k2.is_finite()) {
        return Err(Error::NonFinite("closed form"));
    }
    Ok((k1, k2))
}

/// Values of k₁ at which the interior maximum (k̄₁) or minimum (k̲₁) of
/// f(T, ·) sits exactly at s = S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadRootPair {
    pub k1_bar: f64,
    pub k1_under: f64,
}

pub fn quad_roots_k1(p: &ModelParams, kc: &KernelConstants, k2: f64) -> Result<QuadRootPair> {
    let (x1, x2) = x_roots(kc, k2, p.horizon_t)?;
    let sp = p.horizon_s.powf(2.0 * kc.beta.value() - 1.0);
    Ok(QuadRootPair { k1_bar: x1 * sp, k1_under: x2 * sp })
}

/// Root of h(·, k₂) on (0, k̲₁).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K1Prime {
    pub k1: f64,
    pub iterations: usize,
    /// h at the returned point.
    pub residual: f64,
    pub roots: QuadRootPair,
}

fn h_of(p: &ModelParams, kc: &KernelConstants, x1: f64, k1: f64, k2: f64) -> f64 {
    let s1 = (k1 / x1).powf(1.0 / (2.0 * kc.beta.value() - 1.0));
    f_raw(kc, p.horizon_t, s1, k1, k2) - f_raw(kc, p.horizon_t, p.horizon_s, k1, k2)
}

/// Bisection for h(k₁, k₂) = 0 on (1e-12·k̲₁, k̲₁), to an absolute
/// tolerance of 1e-12·k̲₁.
pub fn find_k1_prime(p: &ModelParams, kc: &KernelConstants, k2: f64) -> Result<K1Prime> {
    let roots = quad_roots_k1(p, kc, k2)?;
    let (x1, _) = x_roots(kc, k2, p.horizon_t)?;
    let mut lo = 1e-12 * roots.k1_under;
    let mut hi = roots.k1_under;
    let h_lo = h_of(p, kc, x1, lo, k2);
    let h_hi = h_of(p, kc, x1, hi, k2);
    if !(h_lo < 0.0 && h_hi > 0.0) {
        return Err(Error::Bracket { lo, hi, h_lo, h_hi });
    }
    let tol = BISECT_REL_TOL * roots.k1_under;
    let mut iterations = 0;
    while hi - lo > tol && iterations < BISECT_MAX {
        let mid = 0.5 * (lo + hi);
        if h_of(p, kc, x1, mid, k2) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let k1 = 0.5 * (lo + hi);
    Ok(K1Prime { k1, iterations, residual: h_of(p, kc, x1, k1, k2), roots })
}

/// Vertex in k₂ of the corner error for fixed k₁, clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K2Vertex {
    pub k2: f64,
    pub clamped: bool,
}

pub fn k2_from_k1(p: &ModelParams, kc: &KernelConstants, k1: f64) -> K2Vertex {
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    let scale = p.horizon_t.powf(1.0 - 2.0 * al) * p.horizon_s.powf(1.0 - 2.0 * be);
    let raw = (kc.c2c2() - 4.0 * kc.ab() * k1 * scale * kc.beta_sum) / kc.beta_ab;
    if raw < 0.0 {
        K2Vertex { k2: 0.0, clamped: true }
    } else {
        K2Vertex { k2: raw, clamped: false }
    }
}

/// Vertex in k₁ of the corner error for fixed k₂: w b(k₂) T^(2α-1) S^(2β-1).
fn k1_vertex(p: &ModelParams, kc: &KernelConstants, k2: f64) -> f64 {
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    kc.w * b_coeff(k2, kc) * p.horizon_t.powf(2.0 * al - 1.0) * p.horizon_s.powf(2.0 * be - 1.0)
}

/// Best k₁ ≥ 0 for fixed k₂, and the resulting supremum.
fn inner_min(p: &ModelParams, kc: &KernelConstants, k2: f64) -> (f64, f64) {
    let mut candidates = vec![0.0, k1_vertex(p, kc, k2).max(0.0)];
    let pt = p.transposed();
    let kt = kc.transposed();
    for (pp, kk) in [(p, kc), (&pt, &kt)] {
        if let Ok(r) = quad_roots_k1(pp, kk, k2) {
            candidates.push(r.k1_bar);
            if let Ok(kp) = find_k1_prime(pp, kk, k2) {
                candidates.push(kp.k1);
            }
        }
    }
    let mut best = (0.0, f64::INFINITY);
    for k1 in candidates {
        let v = boundary_sup(p, kc, k1, k2).value;
        if v < best.1 {
            best = (k1, v);
        }
    }
    best
}

/// k₂ beyond which the corner error alone exceeds its value at k = 0.
fn k2_upper(kc: &KernelConstants) -> f64 {
    // a(k₂) - 4w b(k₂)² - 1 = A k₂² - B k₂ - C
    let ab = kc.ab();
    let a2 = 4.0 * kc.beta_ab / ab - 64.0 * kc.w * kc.beta_sum * kc.beta_sum;
    let a1 = 8.0 * kc.c2c2() / ab - 32.0 * kc.w * kc.c1c1() * kc.beta_sum;
    let a0 = 4.0 * kc.w * kc.c1c1() * kc.c1c1();
    let r = (a1 + (a1 * a1 + 4.0 * a2 * a0).sqrt()) / (2.0 * a2);
    r.max(2.0 * kc.c2c2() / kc.beta_ab)
}

fn golden<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..GOLDEN_ITERS {
        if hi - lo <= 1e-15 * hi.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Global minimum over k₂ ∈ [0, k₂max] of the inner minimum, with extra
/// candidate values of k₂ always included.
fn outer_min(p: &ModelParams, kc: &KernelConstants, k2_max: f64, extra: &[f64]) -> (f64, f64, f64) {
    let phi = |k2: f64| inner_min(p, kc, k2);
    let grid: Vec<f64> = (0..=K2_SCAN).map(|i| k2_max * i as f64 / K2_SCAN as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&k2| phi(k2).1).collect();
    let mut best_i = 0;
    for i in 1..vals.len() {
        if vals[i] < vals[best_i] {
            best_i = i;
        }
    }
    let mut best = {
        let (k1, v) = phi(grid[best_i]);
        (k1, grid[best_i], v)
    };
    let lo = grid[best_i.saturating_sub(1)];
    let hi = grid[(best_i + 1).min(K2_SCAN)];
    let (k2g, _) = golden(|k2| phi(k2).1, lo, hi);
    for k2 in std::iter::once(k2g).chain(extra.iter().copied().filter(|&k| k >= 0.0 && k <= k2_max)) {
        let (k1, v) = phi(k2);
        if v < best.2 {
            best = (k1, k2, v);
        }
    }
    best
}

/// The one-shot pass for a positive discriminant: k₁' at the
/// stationary k₂*, then the k₂ vertex for that k₁'.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneShot {
    pub k1: f64,
    pub k2: f64,
    /// f(T, S) at (k1, k2).
    pub corner_value: f64,
    /// The true supremum at (k1, k2).
    pub sup_value: f64,
}

/// Closed-form diagnostics for the k₂ = 0 class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictedK1 {
    /// 1 when C₁²C₁² ≤ β/((1-β)(1-α)²), otherwise 2.
    pub case: u8,
    pub k1: f64,
    /// Corner error at `k1`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Unconstrained stationary point of the corner error.
    pub closed_form: (f64, f64),
    /// Discriminant on t = T at k₂*.
    pub delta_closed_form: f64,
    /// Discriminant on t = T at the returned k₂.
    pub delta_final: f64,
    pub active: Active,
    /// Interior maximiser on the active edge, if any.
    pub edge_point: Option<f64>,
    /// Root of h on the active edge (t = T when the corner is active) at the returned k₂.
    pub k1_prime: Option<K1Prime>,
    /// Returned k₂ sits on the constraint k₂ = 0.
    pub k2_clamped: bool,
    /// Sign of the discriminant differs between k₂* and the returned k₂.
    pub branch_flip: bool,
    pub one_shot: Option<OneShot>,
    pub restricted_k1: Option<RestrictedK1>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub case: CaseTag,
    pub coefficients: Coefficients,
    /// Supremum of the mean-square error over the rectangle.
    pub value: f64,
    pub diagnostics: Diagnostics,
}

fn finish(
    p: &ModelParams,
    kc: &KernelConstants,
    case: CaseTag,
    k1: f64,
    k2: f64,
    closed_form: (f64, f64),
) -> Result<Solution> {
    let sup = boundary_sup(p, kc, k1, k2);
    if !sup.value.is_finite() {
        return Err(Error::NonFinite("optimal value"));
    }
    let delta_closed_form = discriminant(kc, closed_form.1, p.horizon_t);
    let delta_final = discriminant(kc, k2, p.horizon_t);
    let (edge_point, k1_prime) = match sup.active {
        Active::EdgeS => {
            let (pt, kt) = (p.transposed(), kc.transposed());
            (sup.edge_s.map(|e| e.0), find_k1_prime(&pt, &kt, k2).ok())
        }
        Active::EdgeT => (sup.edge_t.map(|e| e.0), find_k1_prime(p, kc, k2).ok()),
        Active::Corner => (None, find_k1_prime(p, kc, k2).ok()),
    };
    let one_shot =
        (delta_closed_form > 0.0).then(|| find_k1_prime(p, kc, closed_form.1.max(0.0)).ok()).flatten().map(|kp| {
            let v = k2_from_k1(p, kc, kp.k1);
            OneShot {
                k1: kp.k1,
                k2: v.k2,
                corner_value: f_raw(kc, p.horizon_t, p.horizon_s, kp.k1, v.k2),
                sup_value: boundary_sup(p, kc, kp.k1, v.k2).value,
            }
        });
    Ok(Solution {
        case,
        coefficients: Coefficients::new(k1, k2)?,
        value: sup.value,
        diagnostics: Diagnostics {
            closed_form,
            delta_closed_form,
            delta_final,
            active: sup.active,
            edge_point,
            k1_prime,
            k2_clamped: k2 == 0.0,
            branch_flip: (delta_closed_form > 0.0) != (delta_final > 0.0),
            one_shot,
            restricted_k1: None,
        },
    })
}

/// Minimax coefficients over the full class k₁, k₂ ≥ 0.
///
/// When the discriminant at k₂* is non-positive and the stationary point is
/// admissible (non-negative, no interior edge maximum on either edge) it is
/// returned directly. Otherwise the exact constrained minimax is computed.
pub fn solve(p: &ModelParams, kc: &KernelConstants) -> Result<Solution> {
    let cf = solve_closed_form(p, kc)?;
    let delta = discriminant(kc, cf.1, p.horizon_t);
    if delta <= 0.0 && cf.0 >= 0.0 && cf.1 >= 0.0 && boundary_sup(p, kc, cf.0, cf.1).active == Active::Corner {
        return finish(p, kc, CaseTag::DeltaNonPositive, cf.0, cf.1, cf);
    }
    let k2_max = k2_upper(kc);
    let k2_only = kc.c2c2() / kc.beta_ab;
    let (k1, k2, _) = outer_min(p, kc, k2_max, &[0.0, cf.1, k2_only]);
    let sup = boundary_sup(p, kc, k1, k2);
    let case = match sup.active {
        Active::EdgeS => CaseTag::DeltaPositiveBoundaryS,
        Active::EdgeT => CaseTag::DeltaPositiveBoundaryT,
        Active::Corner if k1 == 0.0 => CaseTag::SpecialK2Only,
        Active::Corner if k2 == 0.0 => CaseTag::SpecialK1Only,
        Active::Corner if delta > 0.0 => CaseTag::DeltaPositiveBoundaryT,
        Active::Corner => CaseTag::DeltaNonPositive,
    };
    finish(p, kc, case, k1, k2, cf)
}

/// Minimax over the class k₂ = 0.
pub fn solve_special_k1_only(p: &ModelParams, kc: &KernelConstants) -> Result<Solution> {
    let cf = solve_closed_form(p, kc)?;
    let (k1, _) = inner_min(p, kc, 0.0);
    let mut sol = finish(p, kc, CaseTag::SpecialK1Only, k1, 0.0, cf)?;
    let (al, be) = (kc.alpha.value(), kc.beta.value());
    let c11 = kc.c1c1();
    let threshold = be / ((1.0 - be) * (1.0 - al).powi(2));
    let (case, k1_thm) = if c11 * c11 - threshold <= 0.0 {
        (1, k1_vertex(p, kc, 0.0))
    } else {
        (2, find_k1_prime(p, kc, 0.0).map(|kp| kp.k1).unwrap_or(f64::NAN))
    };
    sol.diagnostics.restricted_k1 =
        Some(RestrictedK1 { case, k1: k1_thm, value: f_raw(kc, p.horizon_t, p.horizon_s, k1_thm, 0.0) });
    Ok(sol)
}

/// Minimax over the class k₁ = 0, where the corner always carries the
/// supremum: k₂ = C₂(α)C₂(β) / (B(1-α,2α-1)B(1-β,2β-1)).
pub fn solve_special_k2_only(p: &ModelParams, kc: &KernelConstants) -> Result<Solution> {
    let cf = solve_closed_form(p, kc)?;
    let k2 = kc.c2c2() / kc.beta_ab;
    let mut sol = finish(p, kc, CaseTag::SpecialK2Only, 0.0, k2, cf)?;
    sol.value = a_coeff(k2, kc) * p.corner_variance();
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::QuadratureConfig;

    fn setup(a: f64, b: f64, t: f64, s: f64) -> (ModelParams, KernelConstants) {
        let p = ModelParams::new(a, b, t, s).unwrap();
        let kc = KernelConstants::new(p.alpha, p.beta, &QuadratureConfig::default()).unwrap();
        (p, kc)
    }

    #[test]
    fn symmetric_three_quarters_uses_closed_form() {
        let (p, kc) = setup(0.75, 0.75, 1.0, 1.0);
        let sol = solve(&p, &kc).unwrap();
        assert_eq!(sol.case, CaseTag::DeltaNonPositive);
        assert!((sol.value - 0.271_875_620_4).abs() < 1e-8, "{}", sol.value);
    }

    #[test]
    fn k2_vertex_clamps() {
        let (p, kc) = setup(0.75, 0.75, 1.0, 1.0);
        let v = k2_from_k1(&p, &kc, 1e6);
        assert!(v.clamped);
        assert_eq!(v.k2, 0.0);
    }

    #[test]
    fn transposed_problem_has_same_value() {
        let (p, kc) = setup(0.6, 0.9, 0.5, 2.0);
        let a = solve(&p, &kc).unwrap().value;
        let b = solve(&p.transposed(), &kc.transposed()).unwrap().value;
        assert!((a / b - 1.0).abs() < 1e-10, "{a} vs {b}");
    }
}
