mod common;

use std::f64::consts::LN_2;

use common::{c, green_1d, random_p2};
use fibered_dyn::geometry::{builtin, norm2, random_skew_product, skew, ValidatedMap, P1, P2};
use fibered_dyn::green::DEFAULT_TOL;
use fibered_dyn::lyapunov::{bj_check, bj_pairing, exponents, per_fiber_exponent, sigma_periodic_approx};
use fibered_dyn::sampling::{
    sample_base, sample_equilibrium, sample_fiber_measure, SampleMethod, SampleSet, CHAIN_DEPTH,
};
use fibered_dyn::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = DEFAULT_TOL;

fn map(name: &str) -> ValidatedMap {
    builtin(name).unwrap().validated().unwrap()
}

fn skew_map(p: &[f64], q: &[(usize, usize, f64)]) -> ValidatedMap {
    skew(p, q).unwrap().validated().unwrap()
}

#[test]
fn torus_exponents() {
    let m = map("torus");
    let f = sample_equilibrium(&m, 100_000, 1).unwrap();
    let t = sample_base(&m, 100_000, 2).unwrap();
    let r = exponents(&m, &f, &t).unwrap();
    assert!((r.lambda_theta.value - LN_2).abs() <= 1e-3);
    assert!((r.lambda_sigma.value - LN_2).abs() <= 1e-3);
    assert!((r.lambda_f.value - 2.0 * LN_2).abs() <= 1e-3);
    assert_eq!(r.lambda_0, 0.0);
}

#[test]
fn chebyshev_product_exponents() {
    let m = map("chebyshev");
    let f = sample_equilibrium(&m, 50_000, 3).unwrap();
    let t = sample_base(&m, 50_000, 4).unwrap();
    let r = exponents(&m, &f, &t).unwrap();
    assert!((r.lambda_theta.value - LN_2).abs() <= 3.0 * r.lambda_theta.se + 1e-4, "{:?}", r.lambda_theta);
    assert!((r.lambda_sigma.value - LN_2).abs() <= 3.0 * r.lambda_sigma.se + 1e-4, "{:?}", r.lambda_sigma);
}

#[test]
fn decomposition_of_total_exponent() {
    let m = map("cheb_coupled");
    let f = sample_equilibrium(&m, 20_000, 5).unwrap();
    let r = exponents(&m, &f, &f.pushforward()).unwrap();
    let gap = r.lambda_f.value - r.lambda_theta.value - r.lambda_sigma.value;
    let se = r.lambda_f.se.hypot(r.lambda_theta.se).hypot(r.lambda_sigma.se);
    assert!(gap.abs() <= 3.0 * se, "{gap} vs {se}");
}

#[test]
fn chain_rule_with_coboundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = |x: &[fibered_dyn::algebra::C64; 3]| (norm2(&x[..2]) / norm2(x)).ln();
    for m in [map("cheb_coupled"), map("desboves"), random_skew_product(2)] {
        for _ in 0..1000 {
            let x = random_p2(&mut rng);
            let base = m.base_derivative(&x.base().unwrap()).ln();
            let sigma = m.sectional_jacobian(&x).ln();
            let total = m.total_jacobian(&x).ln();
            let cob = h(&m.lift(x.coords())) - h(x.coords());
            assert!((total - base - sigma - cob).abs() <= 1e-9, "{total} vs {}", base + sigma + cob);
        }
    }
}

#[test]
fn per_fiber_examples() {
    let one = [P1::from_affine(c(1.0, 0.0))];
    let zero = [P1::from_affine(c(0.0, 0.0))];
    let torus = map("torus");
    assert!((per_fiber_exponent(&torus, &one, TOL).unwrap() - LN_2).abs() <= 2.0 * TOL);

    let m = skew_map(&[0.0, 0.0, 1.0], &[(0, 2, 1.0), (1, 0, 1.0)]);
    assert!((per_fiber_exponent(&m, &zero, TOL).unwrap() - LN_2).abs() <= 2.0 * TOL);
    let oracle = LN_2 + green_1d(|z| z * z + 1.0, 2.0, c(0.0, 0.0));
    let e = per_fiber_exponent(&m, &one, TOL).unwrap();
    assert!((e - oracle).abs() <= 1e-6, "{e} vs {oracle}");

    // Birkhoff average of log|q'| along the fiber measure over t = 1.
    let s = sample_fiber_measure(&m, &one[0], 100_000, 11, CHAIN_DEPTH).unwrap();
    let b = s.integrate(|p| (2.0 * p.affine().unwrap().1).norm().ln());
    assert!((b.value - oracle).abs() <= 3.0 * b.se + 1e-3, "{b:?} vs {oracle}");
}

#[test]
fn torus_periodic_factor() {
    let m = map("torus");
    for n in 1..=6 {
        let p = sigma_periodic_approx(&m, n, TOL).unwrap();
        let expected = (1.0 + 2f64.powi(-(n as i32))) * LN_2;
        assert!((p.value - expected).abs() <= 1e-6, "n={n}: {} vs {expected}", p.value);
        assert_eq!(p.base_points, 2usize.pow(n as u32) + 1);
        assert_eq!(p.excluded_points, 0);
    }
    assert!((sigma_periodic_approx(&m, 3, TOL).unwrap().value - 0.779_790_578).abs() <= 1e-6);
}

#[test]
fn periodic_approximation_of_coupled_map() {
    let m = map("cheb_coupled");
    let r = bj_check(&m, 50_000, 13, TOL).unwrap();
    let direct = r.lambda_sigma_direct;
    let values: Vec<f64> = (1..=6).map(|n| sigma_periodic_approx(&m, n, TOL).unwrap().value).collect();
    let gaps: Vec<f64> = values.iter().map(|v| (v - direct.value).abs()).collect();
    assert!(gaps[5] <= 0.01 + 3.0 * direct.se, "{gaps:?} se {}", direct.se);
    for w in gaps[2..].windows(2) {
        assert!(w[1] <= w[0] + 3.0 * direct.se, "{gaps:?}");
    }
}

#[test]
fn pairing_examples() {
    let torus = map("torus");
    let s = sample_base(&torus, 2000, 1).unwrap();
    let p = bj_pairing(&torus, &s, TOL).unwrap();
    assert!(p.value.abs() <= 1e-6);

    let product = skew_map(&[-1.0, 0.0, 1.0], &[(0, 2, 1.0), (0, 0, -1.0)]);
    let s = sample_base(&product, 2000, 2).unwrap();
    assert!(bj_pairing(&product, &s, TOL).unwrap().value.abs() <= 1e-6);

    let outside = skew_map(&[0.0, 0.0, 1.0], &[(0, 2, 1.0), (0, 0, 2.0)]);
    let s = sample_base(&outside, 2000, 3).unwrap();
    let p = bj_pairing(&outside, &s, TOL).unwrap();
    let oracle = green_1d(|z| z * z + 2.0, 2.0, c(0.0, 0.0));
    assert!(oracle > 0.0);
    assert!((p.value - oracle).abs() <= 1e-6, "{} vs {oracle}", p.value);
}

#[test]
fn bj_check_torus_and_coupled() {
    let r = bj_check(&map("torus"), 20_000, 1, TOL).unwrap();
    assert!(r.discrepancy.abs() <= 2e-3);
    let r = bj_check(&map("cheb_coupled"), 100_000, 2, TOL).unwrap();
    assert!(r.within(3.0), "{} vs {}", r.discrepancy, r.discrepancy_se);
    assert!(r.pairing.min_summand >= -2.0 * TOL);
}

#[test]
fn desboves_spectrum() {
    let r = bj_check(&map("desboves"), 50_000, 3, TOL).unwrap();
    let [small, large] = r.exponents.spectrum();
    assert!((small - LN_2).abs() <= 2e-2, "{small}");
    assert!(large - small >= 0.1, "{large}");
    assert!(r.within(3.0), "{} vs {}", r.discrepancy, r.discrepancy_se);
}

#[test]
fn singular_samples_are_rejected() {
    let m = map("torus");
    // z = 0 is critical in every fiber.
    let on_crit =
        SampleSet::uniform(vec![P2::from_affine(c(1.0, 0.0), c(0.0, 0.0)); 100], 0, 0, SampleMethod::BackwardOrbit);
    let base = sample_base(&m, 100, 0).unwrap();
    assert!(matches!(exponents(&m, &on_crit, &base), Err(Error::SingularSample { dropped: 100, total: 100 })));

    let mut pts = sample_equilibrium(&m, 1000, 1).unwrap().points;
    pts[17] = on_crit.points[0];
    let s = SampleSet::uniform(pts, 1, 0, SampleMethod::BackwardOrbit);
    let r = exponents(&m, &s, &base).unwrap();
    assert_eq!(r.lambda_sigma.dropped, 1);
    assert!((r.lambda_sigma.value - LN_2).abs() <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn lower_bounds_and_nonnegative_pairing(seed in 100u64..10_000) {
        let m = random_skew_product(seed);
        let r = bj_check(&m, 5_000, seed, TOL).unwrap();
        let s = &r.exponents.lambda_sigma;
        let t = &r.exponents.lambda_theta;
        prop_assert!(s.value >= LN_2 - 3.0 * s.se, "{s:?}");
        prop_assert!(t.value >= 0.5 * LN_2 - 3.0 * t.se, "{t:?}");
        prop_assert!(r.pairing.min_summand >= -2.0 * TOL);
    }
}
