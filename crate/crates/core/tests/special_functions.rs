use proptest::prelude::*;
use rosenblatt::quad::{tanh_sinh, QuadratureConfig};
use rosenblatt::special::*;

proptest! {
    #[test]
    fn beta_is_symmetric(a in 0.01f64..20.0, b in 0.01f64..20.0) {
        let (x, y) = (beta(a, b).unwrap(), beta(b, a).unwrap());
        prop_assert!((x - y).abs() <= 4.0 * f64::EPSILON * x);
    }

    #[test]
    fn beta_recurrence(a in 0.01f64..20.0, b in 0.01f64..20.0) {
        let lhs = beta(a + 1.0, b).unwrap();
        let rhs = beta(a, b).unwrap() * a / (a + b);
        prop_assert!((lhs / rhs - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn gamma_recurrence(x in 0.05f64..40.0) {
        let lhs = ln_gamma(x + 1.0);
        let rhs = ln_gamma(x) + x.ln();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn incomplete_beta_complements(x in 0.001f64..0.999, a in 0.1f64..5.0, b in 0.1f64..5.0) {
        let s = inc_beta_reg(x, a, b) + inc_beta_reg(1.0 - x, b, a);
        prop_assert!((s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn beta_matches_quadrature() {
    let cfg = QuadratureConfig::default().with_tol(1e-12).unwrap();
    for &(a, b) in &[(0.05, 0.1), (0.5, 0.5), (0.3, 1.7), (2.5, 3.5), (0.9, 0.45)] {
        let q = tanh_sinh(|_, l, r| l.powf(a - 1.0) * r.powf(b - 1.0), 0.0, 1.0, &cfg).unwrap();
        let exact = beta(a, b).unwrap();
        assert!((q.value / exact - 1.0).abs() < 1e-10, "B({a},{b}): {} vs {exact}", q.value);
    }
}

#[test]
fn incomplete_beta_matches_quadrature() {
    let cfg = QuadratureConfig::default().with_tol(1e-12).unwrap();
    for &(x, a, b) in &[(0.3, 0.4, 0.8), (0.9, 1.5, 0.25), (0.05, 2.0, 3.0)] {
        let q = tanh_sinh(|_, l, r| l.powf(a - 1.0) * (r + 1.0 - x).powf(b - 1.0), 0.0, x, &cfg).unwrap();
        let got = inc_beta(x, a, b);
        assert!((got / q.value - 1.0).abs() < 1e-10, "{got} vs {}", q.value);
    }
}

#[test]
fn squared_beta_bound_on_grid() {
    for i in 1..200 {
        let a = 0.5 + 0.5 * i as f64 / 200.0;
        let lhs = beta(1.0 - a, a).unwrap().powi(2);
        let rhs = beta(1.0 - a, 2.0 * a - 1.0).unwrap() / (1.0 - a);
        assert!(lhs < rhs, "alpha {a}: {lhs} >= {rhs}");
    }
}

#[test]
fn hurst_index_domain() {
    for bad in [0.5, 0.5000005, 1.0, 0.9999995, 0.2, 1.3, f64::NAN] {
        assert!(HurstIndex::new(bad).is_err(), "{bad}");
    }
    let h = HurstIndex::new(0.75).unwrap();
    assert_eq!(h.prime(), 0.875);
}

#[test]
fn normalising_constant_values() {
    let d = d_norm(HurstIndex::new(0.75).unwrap());
    assert!((d - (4.0 / 7.0) * (4.0f64 / 3.0).sqrt()).abs() < 1e-15);
    let d = d_norm(HurstIndex::new(0.9).unwrap());
    assert!((d - (1.0 / 1.9) * (1.6f64 / 0.9).sqrt()).abs() < 1e-15);
}
