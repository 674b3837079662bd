use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rosenblatt::constants::{c1, c2, c2_core};
use rosenblatt::special::{gamma, HurstIndex};
use rosenblatt::QuadratureConfig;
use std::time::Instant;

fn h(v: f64) -> HurstIndex {
    HurstIndex::new(v).unwrap()
}

// Γ(1-H)Γ(H/2)Γ(2H-1)/Γ(3H/2), obtained by integrating in the order (r, s)
// and recognising two Beta integrals.
fn core_gamma_form(a: f64) -> f64 {
    gamma(1.0 - a) * gamma(a / 2.0) * gamma(2.0 * a - 1.0) / gamma(1.5 * a)
}

#[test]
fn c2_core_matches_gamma_form() {
    let cfg = QuadratureConfig::default();
    for i in 0..=40 {
        let a = 0.55 + 0.01 * i as f64;
        let start = Instant::now();
        let q = c2_core(h(a), &cfg).unwrap();
        let exact = core_gamma_form(a);
        assert!((q / exact - 1.0).abs() < 2e-8, "alpha {a}: {q} vs {exact}");
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }
}

#[test]
fn c2_tighter_tolerance_is_more_accurate() {
    let cfg = QuadratureConfig::default().with_tol(1e-12).unwrap();
    let q = c2_core(h(0.75), &cfg).unwrap();
    assert!((q / core_gamma_form(0.75) - 1.0).abs() < 1e-11);
}

#[test]
fn c2_three_quarters_against_monte_carlo() {
    // v ~ Beta(1-H, 3H/2-1) and s ~ Beta(1, H/2) absorb every singular
    // factor, leaving the bounded weight ((1-sv)/(1-v))^(H/2-1) ≤ 1.
    let a = 0.75;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dv = Beta::new(1.0 - a, 1.5 * a - 1.0).unwrap();
    let ds = Beta::new(1.0, a / 2.0).unwrap();
    let norm =
        rosenblatt::special::beta(1.0 - a, 1.5 * a - 1.0).unwrap() * rosenblatt::special::beta(1.0, a / 2.0).unwrap();
    let n = 2_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let v: f64 = dv.sample(&mut rng);
        let s: f64 = ds.sample(&mut rng);
        let x = norm * ((1.0 - s * v) / (1.0 - v)).powf(a / 2.0 - 1.0);
        sum += x;
        sq += x * x;
    }
    let mean = sum / n as f64;
    let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    let tol = 1e-3;
    let cfg = QuadratureConfig::default().with_tol(tol).unwrap();
    let q = c2_core(h(a), &cfg).unwrap();
    assert!(se / mean < tol, "monte carlo too noisy: {}", se / mean);
    assert!((q - mean).abs() < 2.0 * tol * mean + 4.0 * se, "{q} vs {mean} ± {se}");
}

#[test]
fn reference_values() {
    let cfg = QuadratureConfig::default();
    let table = [
        (0.55, 0.84914, 1.74809),
        (0.6, 1.25220, 1.36595),
        (0.75, 2.59420, 1.16909),
        (0.9, 6.95140, 1.26681),
        (0.95, 14.04466, 1.33253),
    ];
    for (a, e1, e2) in table {
        assert!((c1(h(a)).unwrap() / e1 - 1.0).abs() < 1e-5, "c1({a})");
        assert!((c2(h(a), &cfg).unwrap() / e2 - 1.0).abs() < 1e-5, "c2({a})");
    }
}

#[test]
fn c2_is_positive_across_range() {
    let cfg = QuadratureConfig::default().with_tol(1e-6).unwrap();
    for i in 0..=45 {
        let a = 0.52 + 0.01 * i as f64;
        let v = c2(h(a), &cfg).unwrap();
        assert!(v > 0.0 && v.is_finite(), "alpha {a}: {v}");
    }
}

#[test]
fn c2_near_the_ends_converges_or_reports_estimate() {
    let cfg = QuadratureConfig::default().with_tol(1e-6).unwrap();
    for a in [0.500_01, 0.501, 0.51, 0.99, 0.999_99] {
        match c2(h(a), &cfg) {
            Ok(v) => assert!(v > 0.0 && v.is_finite()),
            Err(rosenblatt::Error::Convergence { estimate, error, .. }) => {
                assert!(estimate > 0.0 && estimate.is_finite() && error > 0.0)
            }
            Err(e) => panic!("alpha {a}: {e}"),
        }
    }
}
