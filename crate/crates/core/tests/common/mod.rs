//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here calls into the optimizer.
#![allow(dead_code)]

use rayon::prelude::*;
use rosenblatt::constants::KernelConstants;
use rosenblatt::functional::{f_eval, Coefficients, ModelParams};
use rosenblatt::quad::QuadratureConfig;

pub fn setup(a: f64, b: f64, t: f64, s: f64) -> (ModelParams, KernelConstants) {
    let p = ModelParams::new(a, b, t, s).unwrap();
    let kc = KernelConstants::new(p.alpha, p.beta, &QuadratureConfig::default()).unwrap();
    (p, kc)
}

pub fn f_at(kc: &KernelConstants, t: f64, s: f64, k1: f64, k2: f64) -> f64 {
    f_eval(kc, t, s, &Coefficients { k1, k2 })
}

/// f at a fixed point as a quadratic in (k₁, k₂), recovered from six
/// evaluations: c0 + c1 k₁ + c2 k₂ + c11 k₁² + c12 k₁k₂ + c22 k₂².
#[derive(Clone, Copy, Debug)]
pub struct Quadratic([f64; 6]);

impl Quadratic {
    pub fn fit(kc: &KernelConstants, t: f64, s: f64) -> Self {
        let f = |k1, k2| f_at(kc, t, s, k1, k2);
        let f00 = f(0.0, 0.0);
        let (f10, fm0) = (f(1.0, 0.0), f(-1.0, 0.0));
        let (f01, f0m) = (f(0.0, 1.0), f(0.0, -1.0));
        let f11 = f(1.0, 1.0);
        let c1 = 0.5 * (f10 - fm0);
        let c11 = 0.5 * (f10 + fm0) - f00;
        let c2 = 0.5 * (f01 - f0m);
        let c22 = 0.5 * (f01 + f0m) - f00;
        let c12 = f11 - f00 - c1 - c2 - c11 - c22;
        Self([f00, c1, c2, c11, c12, c22])
    }

    #[inline]
    pub fn eval(&self, k1: f64, k2: f64) -> f64 {
        let c = &self.0;
        c[0] + k1 * (c[1] + c[3] * k1 + c[4] * k2) + k2 * (c[2] + c[5] * k2)
    }
}

/// Sample points on the edges t = T and s = S: uniform plus geometric
/// clustering towards 0.
pub fn boundary_points(p: &ModelParams, per_edge: usize) -> Vec<(f64, f64)> {
    let frac: Vec<f64> = (1..=per_edge / 2)
        .map(|i| i as f64 / (per_edge / 2) as f64)
        .chain((0..per_edge / 2).map(|i| 1e-4f64.powf(1.0 - i as f64 / (per_edge / 2) as f64)))
        .collect();
    let (t, s) = (p.horizon_t, p.horizon_s);
    frac.iter().map(|&u| (t, u * s)).chain(frac.iter().map(|&u| (u * t, s))).collect()
}

/// max over the sampled boundary of f.
pub fn sampled_sup(quads: &[Quadratic], k1: f64, k2: f64) -> f64 {
    quads.iter().map(|q| q.eval(k1, k2)).fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Copy, Debug)]
pub struct GridMin {
    pub k1: f64,
    pub k2: f64,
    pub value: f64,
}

/// Minimises `obj` over a `res`×`res` grid on [0,k1_max]×[0,k2_max], then
/// zooms `zooms` times onto ±2 cells around the best node.
pub fn grid_search<F>(obj: F, k1_max: f64, k2_max: f64, res: usize, zooms: usize) -> GridMin
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let (mut lo1, mut hi1, mut lo2, mut hi2) = (0.0, k1_max, 0.0, k2_max);
    let mut best = GridMin { k1: 0.0, k2: 0.0, value: obj(0.0, 0.0) };
    for _ in 0..=zooms {
        let h1 = (hi1 - lo1) / res as f64;
        let h2 = (hi2 - lo2) / res as f64;
        let cand = (0..=res)
            .into_par_iter()
            .map(|i| {
                let k1 = lo1 + i as f64 * h1;
                let mut b = GridMin { k1, k2: lo2, value: f64::INFINITY };
                for j in 0..=res {
                    let k2 = lo2 + j as f64 * h2;
                    let v = obj(k1, k2);
                    if v < b.value {
                        b = GridMin { k1, k2, value: v };
                    }
                }
                b
            })
            .reduce(
                || GridMin { k1: 0.0, k2: 0.0, value: f64::INFINITY },
                |a, b| if b.value < a.value { b } else { a },
            );
        if cand.value < best.value {
            best = cand;
        }
        lo1 = (best.k1 - 2.0 * h1).max(0.0);
        hi1 = best.k1 + 2.0 * h1;
        lo2 = (best.k2 - 2.0 * h2).max(0.0);
        hi2 = best.k2 + 2.0 * h2;
    }
    best
}

/// Box that comfortably contains the minimax coefficients.
pub fn search_box(kc: &KernelConstants, p: &ModelParams) -> (f64, f64) {
    let (a, b) = (kc.alpha.value(), kc.beta.value());
    let scale = p.horizon_t.powf(2.0 * a - 1.0) * p.horizon_s.powf(2.0 * b - 1.0);
    let k1 = 4.0 * kc.w * kc.c1c1() * scale;
    let k2 = 4.0 * kc.c2c2() / kc.beta_ab;
    (k1, k2)
}

/// Scan of a convex function on [lo, hi] followed by golden-section
/// refinement of the best bracket.
pub fn scan_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let mut best = (lo, f(lo));
    for i in 1..=n {
        let x = lo + i as f64 * h;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (x, v) = golden_min(&f, (best.0 - h).max(lo), (best.0 + h).min(hi));
    if v < best.1 {
        (x, v)
    } else {
        best
    }
}

/// Nested oracle: min over k₂ of min over k₁ of the max over sampled
/// boundary points. f is jointly convex in (k₁, k₂), so both levels are
/// convex one-dimensional problems.
pub fn minimax_oracle(p: &ModelParams, kc: &KernelConstants) -> GridMin {
    let quads: Vec<Quadratic> = boundary_points(p, 2000).into_iter().map(|(t, s)| Quadratic::fit(kc, t, s)).collect();
    let (k1m, k2m) = search_box(kc, p);
    let inner = |k2: f64| scan_min(|k1| sampled_sup(&quads, k1, k2), 0.0, k1m, 200);
    let scan: Vec<(f64, f64)> = (0..=200)
        .into_par_iter()
        .map(|i| {
            let k2 = k2m * i as f64 / 200.0;
            (k2, inner(k2).1)
        })
        .collect();
    let (i, _) = scan.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &(_, v))| if v < b.1 { (i, v) } else { b });
    let h = k2m / 200.0;
    let lo = (scan[i].0 - h).max(0.0);
    let (k2, _) = golden_min(|k2| inner(k2).1, lo, scan[i].0 + h);
    let k2 = if inner(k2).1 <= scan[i].1 { k2 } else { scan[i].0 };
    let (k1, value) = inner(k2);
    GridMin { k1, k2, value }
}

/// Oracle for the unconstrained corner minimum.
pub fn corner_oracle(p: &ModelParams, kc: &KernelConstants, k1_max: f64, k2_max: f64) -> GridMin {
    let q = Quadratic::fit(kc, p.horizon_t, p.horizon_s);
    grid_search(|k1, k2| q.eval(k1, k2), k1_max, k2_max, 400, 4)
}

/// Golden-section minimum of a unimodal function on [lo, hi].
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}
