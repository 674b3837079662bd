mod common;

use common::setup;
use rosenblatt::functional::Coefficients;
use rosenblatt::oracle::*;
use rosenblatt::quad::{tanh_sinh, QuadratureConfig};
use rosenblatt::special::{c_kernel, HurstIndex};

fn cfg(tol: f64) -> QuadratureConfig {
    QuadratureConfig::default().with_tol(tol).unwrap()
}

#[test]
fn q_kernel_is_symmetric_and_homogeneous() {
    let h = HurstIndex::new(0.7).unwrap();
    let c = cfg(1e-12);
    for &(t, y1, y2) in &[(1.0, 0.2, 0.7), (2.0, 1.5, 0.01), (0.5, 0.1, 0.3)] {
        let q = q_kernel(h, t, y1, y2, &c).unwrap();
        let r = q_kernel(h, t, y2, y1, &c).unwrap();
        assert!((q - r).abs() <= 1e-10 * q.abs());
        let lam: f64 = 3.0;
        let s = q_kernel(h, lam * t, lam * y1, lam * y2, &c).unwrap();
        assert!((s / (lam.powf(0.7 - 1.0) * q) - 1.0).abs() < 1e-9, "{s} vs {q}");
    }
    assert_eq!(q_kernel(h, 1.0, 1.5, 0.2, &c).unwrap(), 0.0);
    assert!(q_kernel(h, 1.0, 0.4, 0.4, &c).is_err());
}

#[test]
fn kernel_derivative_scaling() {
    let hp = 0.8;
    let lam: f64 = 2.5;
    let k = kernel_k_deriv(hp, 0.9, 0.3).unwrap();
    let s = kernel_k_deriv(hp, lam * 0.9, lam * 0.3).unwrap();
    assert!((s / (lam.powf(hp - 1.5) * k) - 1.0).abs() < 1e-13);
    assert!(kernel_k_deriv(hp, 0.3, 0.9).is_err());
}

#[test]
fn kernel_derivative_reproduces_fbm_covariance() {
    // ∫₀^v ∂K/∂u(u,y) ∂K/∂v(v,y) dy = H'(2H'-1)|u-v|^(2H'-2) for v < u
    let c = cfg(1e-11);
    for &(hp, u, v) in &[(0.8, 1.0, 0.5), (0.9, 0.7, 0.3), (0.76, 2.0, 1.9)] {
        let delta = 1e-7 * v;
        let body = tanh_sinh(
            |y, _, _| kernel_k_deriv(hp, u, y).unwrap() * kernel_k_deriv(hp, v, y).unwrap(),
            0.0,
            v - delta,
            &c,
        )
        .unwrap()
        .value;
        // near y = v the second factor is c v^(1/2-H') g^(H'-3/2) v^(H'-1/2)
        let ck = c_kernel(hp).unwrap();
        let tail = kernel_k_deriv(hp, u, v).unwrap() * ck * delta.powf(hp - 0.5) / (hp - 0.5);
        let got = body + tail;
        let want = hp * (2.0 * hp - 1.0) * (u - v).abs().powf(2.0 * hp - 2.0);
        assert!((got / want - 1.0).abs() < 1e-5, "H' {hp}: {got} vs {want}");
    }
}

#[test]
fn normalisation_ratio_is_one() {
    for &h in &[0.6, 0.75, 0.9] {
        let r = verify_normalization(HurstIndex::new(h).unwrap(), 1.0, &cfg(1e-8)).unwrap();
        assert!((r - 1.0).abs() < 1e-6, "{h}: {r}");
    }
}

#[test]
fn tolerance_halving_is_stable() {
    let h = HurstIndex::new(0.8).unwrap();
    let a = max_min_overlap(h, 1.0, &cfg(1e-8)).unwrap();
    let b = max_min_overlap(h, 1.0, &cfg(5e-9)).unwrap();
    assert!((a - b).abs() <= 1e-8 * a.abs());
    let a = rank_one_overlap(h, 1.0, &cfg(1e-8)).unwrap();
    let b = rank_one_overlap(h, 1.0, &cfg(5e-9)).unwrap();
    assert!((a - b).abs() <= 1e-8 * a.abs());
}

#[test]
fn overlap_constants_match_closed_forms() {
    for &h in &[0.6, 0.75, 0.9] {
        let hi = HurstIndex::new(h).unwrap();
        let (q1, q2) = overlap_constants(hi, &cfg(1e-7)).unwrap();
        let (e1, e2) = closed_constants(hi, &cfg(1e-10)).unwrap();
        assert!((q1 / e1 - 1.0).abs() < 1e-6 && (q2 / e2 - 1.0).abs() < 1e-6, "{h}");
        // the quadratic-term bound still holds with the recomputed constants
        let (_, kc) = setup(h, h, 1.0, 1.0);
        assert!(4.0 / (h * h) * (q2 * q2).powi(2) <= kc.beta_ab);
    }
}

#[test]
fn report_formats() {
    let (p, kc) = setup(0.75, 0.75, 1.0, 1.0);
    let c = Coefficients::new(0.02, 0.01).unwrap();
    let rep = verify_theorem21(&p, &c, &kc, &cfg(1e-10), Thresholds::default()).unwrap();
    assert!(rep.all_pass());
    assert_eq!(rep.checks.len(), 8);
    let csv = rep.to_csv();
    assert!(csv.starts_with("check_name,computed,expected,rel_residual,pass\n"));
    assert_eq!(csv.lines().count(), 9);
    assert!(rep.to_key_value().ends_with("all_pass=true\n"));
    let strict = Thresholds { singular: 0.0, elementary: 0.0 };
    let rep = verify_theorem21(&p, &c, &kc, &cfg(1e-10), strict).unwrap();
    assert!(!rep.all_pass());
}

#[test]
fn mismatched_constants_rejected() {
    let (p, _) = setup(0.75, 0.75, 1.0, 1.0);
    let (_, other) = setup(0.7, 0.75, 1.0, 1.0);
    assert!(verify_theorem21(&p, &Coefficients::ZERO, &other, &cfg(1e-8), Thresholds::default()).is_err());
}
