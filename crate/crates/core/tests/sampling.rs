mod common;

use common::{c, green_1d};
use fibered_dyn::algebra::C64;
use fibered_dyn::geometry::{builtin, random_skew_product, skew, ValidatedMap, P1};
use fibered_dyn::green::{relative_green, DEFAULT_TOL};
use fibered_dyn::sampling::{
    periodic_base_points, sample_base, sample_equilibrium, sample_fiber_measure, Estimate, SampleSet, TestFunction,
    CHAIN_DEPTH, P1_FAMILY, P2_FAMILY,
};

fn map(name: &str) -> ValidatedMap {
    builtin(name).unwrap().validated().unwrap()
}

fn skew_map(p: &[f64], q: &[(usize, usize, f64)]) -> ValidatedMap {
    skew(p, q).unwrap().validated().unwrap()
}

fn within(a: &Estimate, b: &Estimate) -> bool {
    (a.value - b.value).abs() <= 3.0 * a.combined_se(b)
}

#[test]
fn base_samples_on_julia_sets() {
    let s = sample_base(&map("torus"), 5000, 1).unwrap();
    assert_eq!(s.len(), 5000);
    for p in &s.points {
        assert!((p.affine().unwrap().norm() - 1.0).abs() <= 1e-6);
    }
    let s = sample_base(&map("chebyshev"), 5000, 2).unwrap();
    for p in &s.points {
        let t = p.affine().unwrap();
        assert!(t.im.abs() <= 1e-6 && t.re.abs() <= 2.0 + 1e-6, "{t}");
    }
    assert!((s.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn basilica_logarithmic_potential() {
    let s = sample_base(&map("basilica_base"), 40_000, 3).unwrap();
    let w = c(10.0, 0.0);
    let e = s.integrate(|p| (p.affine().unwrap() - w).norm().ln());
    let oracle = green_1d(|t| t * t - 1.0, 2.0, w);
    assert!((e.value - oracle).abs() <= 3.0 * e.se + 1e-9, "{} vs {oracle} (se {})", e.value, e.se);
}

#[test]
fn equilibrium_torus_and_potential() {
    let s = sample_equilibrium(&map("torus"), 5000, 4).unwrap();
    for p in &s.points {
        let (t, z) = p.affine().unwrap();
        assert!((t.norm() - 1.0).abs() <= 1e-6 && (z.norm() - 1.0).abs() <= 1e-6);
    }
    let e = s.integrate(|p| TestFunction::new([0, 0, 1]).eval(p));
    assert!((e.value - 1.0 / 3.0).abs() <= 3.0 * e.se.max(1e-15));

    let m = map("cheb_coupled");
    let s = sample_equilibrium(&m, 4000, 5).unwrap();
    let e = s.integrate(|p| relative_green(&m, p, DEFAULT_TOL).unwrap().value);
    assert!(e.value.abs() <= 3.0 * DEFAULT_TOL + 3.0 * e.se, "{e:?}");
}

#[test]
fn equilibrium_reproducible_across_seeds() {
    let m = map("cheb_coupled");
    let phi = TestFunction::new([0, 0, 1]);
    let a = sample_equilibrium(&m, 20_000, 11).unwrap().integrate(|p| phi.eval(p));
    let b = sample_equilibrium(&m, 20_000, 12).unwrap().integrate(|p| phi.eval(p));
    assert!(within(&a, &b), "{a:?} {b:?}");
}

#[test]
fn determinism() {
    let m = random_skew_product(8);
    assert_eq!(sample_equilibrium(&m, 500, 9).unwrap(), sample_equilibrium(&m, 500, 9).unwrap());
    assert_eq!(sample_base(&m, 500, 9).unwrap(), sample_base(&m, 500, 9).unwrap());
    let a = P1::from_affine(c(0.3, 0.2));
    assert_eq!(
        sample_fiber_measure(&m, &a, 100, 9, CHAIN_DEPTH).unwrap(),
        sample_fiber_measure(&m, &a, 100, 9, CHAIN_DEPTH).unwrap()
    );
    assert_ne!(sample_base(&m, 500, 9).unwrap(), sample_base(&m, 500, 10).unwrap());
}

#[test]
fn pushforward_matches_base_measure() {
    for name in ["torus", "chebyshev", "cheb_coupled", "desboves"] {
        let m = map(name);
        let f = sample_equilibrium(&m, 20_000, 21).unwrap().pushforward();
        let t = sample_base(&m, 20_000, 22).unwrap();
        for psi in P1_FAMILY {
            let a = f.integrate(|p| psi.eval(p));
            let b = t.integrate(|p| psi.eval(p));
            assert!(within(&a, &b), "{name} {:?}: {a:?} vs {b:?}", psi.exps);
        }
    }
}

#[test]
fn fiber_measures_trivial_cases() {
    let torus = map("torus");
    let s = sample_fiber_measure(&torus, &P1::from_affine(C64::from_polar(1.0, 0.7)), 2000, 1, CHAIN_DEPTH).unwrap();
    for p in &s.points {
        assert!((p.affine().unwrap().1.norm() - 1.0).abs() <= 1e-6);
    }
    let product = skew_map(&[-1.0, 0.0, 1.0], &[(0, 2, 1.0)]);
    for a in [c(0.3, 0.1), c(-1.0, 0.0), c(1.2, 0.0), c(0.5, 0.0), c(0.0, 0.0)] {
        let s = sample_fiber_measure(&product, &P1::from_affine(a), 500, 2, CHAIN_DEPTH).unwrap();
        for p in &s.points {
            let (t, z) = p.affine().unwrap();
            assert!((t - a).norm() < 1e-4);
            assert!((z.norm() - 1.0).abs() <= 1e-6);
        }
    }
}

#[test]
fn fiber_chain_over_escaping_base_point() {
    // Base orbit reaches ∞ in floating point; the chain is cut short.
    let product = skew_map(&[-1.0, 0.0, 1.0], &[(0, 2, 1.0)]);
    let s = sample_fiber_measure(&product, &P1::from_affine(c(1.5, -0.4)), 500, 2, CHAIN_DEPTH).unwrap();
    for p in &s.points {
        let (_, z) = p.affine().unwrap();
        assert!((z.norm() - 1.0).abs() <= 5e-3, "{z}");
    }
}

#[test]
fn fiber_measure_potential_over_fixed_fiber() {
    let m = skew_map(&[0.0, 0.0, 1.0], &[(0, 2, 1.0), (1, 0, 1.0)]);
    let s = sample_fiber_measure(&m, &P1::from_affine(c(1.0, 0.0)), 100_000, 7, CHAIN_DEPTH).unwrap();
    let w = c(10.0, 0.0);
    let e = s.integrate(|p| (p.affine().unwrap().1 - w).norm().ln());
    let oracle = green_1d(|z| z * z + 1.0, 2.0, w);
    assert!((e.value - oracle).abs() <= 1e-3, "{} vs {oracle} (se {})", e.value, e.se);
}

#[test]
fn fiber_invariance() {
    let m = map("cheb_coupled");
    let a = P1::from_affine(c(0.4, 0.0));
    let image = m.apply_base(&a);
    let pushed = sample_fiber_measure(&m, &a, 20_000, 31, CHAIN_DEPTH).unwrap();
    let pushed = SampleSet::uniform(
        pushed.points.iter().map(|p| m.apply(p)).collect(),
        pushed.seed,
        pushed.burn_in,
        pushed.method,
    );
    let direct = sample_fiber_measure(&m, &image, 20_000, 32, CHAIN_DEPTH).unwrap();
    for phi in P2_FAMILY {
        let x = pushed.integrate(|p| phi.eval(p));
        let y = direct.integrate(|p| phi.eval(p));
        assert!(within(&x, &y), "{:?}: {x:?} vs {y:?}", phi.exps);
    }
}

#[test]
fn decomposition_direct_vs_nested() {
    let m = map("cheb_coupled");
    let direct = sample_equilibrium(&m, 40_000, 41).unwrap();
    let base = sample_base(&m, 2000, 42).unwrap();
    let inner = 20;
    let fibers: Vec<SampleSet<3>> = base
        .points
        .iter()
        .enumerate()
        .map(|(i, a)| sample_fiber_measure(&m, a, inner, 1000 + i as u64, CHAIN_DEPTH).unwrap())
        .collect();
    for phi in P2_FAMILY {
        let x = direct.integrate(|p| phi.eval(p));
        let means: Vec<f64> = fibers.iter().map(|s| s.integrate(|p| phi.eval(p)).value).collect();
        let y = fibered_dyn::sampling::jackknife(&means, &base.weights, 50);
        assert!(within(&x, &y), "{:?}: {x:?} vs {y:?}", phi.exps);
    }
}

fn sorted_affine(set: &fibered_dyn::sampling::PeriodicSet) -> (Vec<C64>, usize) {
    let mut v = Vec::new();
    let mut inf = 0;
    for p in &set.points {
        match p.point.affine() {
            Some(t) => v.extend(std::iter::repeat_n(t, p.multiplicity)),
            None => inf += p.multiplicity,
        }
    }
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    (v, inf)
}

#[test]
fn periodic_points_of_squaring() {
    let m = map("torus");
    let set = periodic_base_points(&m, 1).unwrap();
    let (v, inf) = sorted_affine(&set);
    assert_eq!(inf, 1);
    assert_eq!(v.len(), 2);
    assert!(v[0].norm() < 1e-12 && (v[1] - 1.0).norm() < 1e-12);

    let set = periodic_base_points(&m, 2).unwrap();
    assert_eq!(set.total_multiplicity(), 5);
    let (v, inf) = sorted_affine(&set);
    assert_eq!(inf, 1);
    let w = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
    let mut oracle = vec![c(0.0, 0.0), c(1.0, 0.0), w, w.conj()];
    oracle.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for (a, b) in v.iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }
    // {ω, ω̄} is a 2-cycle; 0, 1, ∞ are fixed.
    let mut periods: Vec<usize> = set.cycles.iter().map(|c| c.period).collect();
    periods.sort();
    assert_eq!(periods, vec![1, 1, 1, 2]);
}

#[test]
fn chebyshev_period_three_angles() {
    let set = periodic_base_points(&map("chebyshev"), 3).unwrap();
    assert_eq!(set.total_multiplicity(), 9);
    assert!(set.max_residual() <= 1e-8);
    let (v, inf) = sorted_affine(&set);
    assert_eq!(inf, 1);
    let tau = std::f64::consts::TAU;
    let mut oracle: Vec<f64> = (0..4).map(|k| 2.0 * (tau * k as f64 / 7.0).cos()).collect();
    oracle.extend((1..5).map(|k| 2.0 * (tau * k as f64 / 9.0).cos()));
    oracle.sort_by(f64::total_cmp);
    for (a, b) in v.iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn periodic_cardinality_and_cycles() {
    let maps = [map("cheb_coupled"), map("desboves"), random_skew_product(3), random_skew_product(4)];
    for m in &maps {
        let d = m.d();
        for n in 1..=4 {
            if d.pow(n as u32) > 256 {
                continue;
            }
            let set = periodic_base_points(m, n).unwrap();
            assert_eq!(set.total_multiplicity(), d.pow(n as u32) + 1);
            for cyc in &set.cycles {
                assert_eq!(n % cyc.period, 0);
                for (i, a) in cyc.points.iter().enumerate() {
                    let next = &cyc.points[(i + 1) % cyc.period];
                    assert!(m.apply_base(a).chordal(next) <= 1e-8);
                }
            }
        }
    }
}

#[test]
fn periodic_rejects_large_degree() {
    assert!(matches!(periodic_base_points(&map("torus"), 13), Err(fibered_dyn::Error::DegreeOverflow { .. })));
}

mod stats {
    use fibered_dyn::sampling::jackknife;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn jackknife_matches_iid_standard_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let w = vec![1.0 / n as f64; n];
        let e = jackknife(&v, &w, 50);
        let sd = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        assert!((e.value - 0.5).abs() < 4.0 * sd);
        assert!((e.se / sd - 1.0).abs() < 0.35, "{} vs {}", e.se, sd);
    }

    #[test]
    fn constant_has_zero_error() {
        let e = jackknife(&[2.0; 10], &[0.1; 10], 50);
        assert_eq!(e.value, 2.0);
        assert_eq!(e.se, 0.0);
        assert_eq!(e.n, 10);
    }
}

mod sample_sets {
    use fibered_dyn::algebra::C64;
    use fibered_dyn::geometry::{P1, P2};
    use fibered_dyn::sampling::*;

    #[test]
    fn delta_sample_integrates_exactly() {
        let x = P2::new([C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap();
        let s = SampleSet::uniform(vec![x; 100], 0, 0, SampleMethod::BackwardOrbit);
        let e = s.integrate(|p| TestFunction::new([1, 0, 0]).eval(p));
        assert_eq!(e.value, 1.0);
        assert_eq!(e.se, 0.0);
    }

    #[test]
    fn merge_renormalizes() {
        let x = P1::from_affine(C64::new(0.5, 0.0));
        let a = SampleSet::uniform(vec![x; 3], 1, 0, SampleMethod::BackwardOrbit);
        let b = SampleSet::uniform(vec![x; 5], 2, 0, SampleMethod::BackwardOrbit);
        let m = SampleSet::merge(&[a, b]).unwrap();
        assert_eq!(m.len(), 8);
        assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_functions_bounded() {
        let x = P2::new([C64::new(0.3, 1.0), C64::new(-2.0, 0.1), C64::new(0.0, 0.7)]).unwrap();
        for f in P2_FAMILY {
            let v = f.eval(&x);
            assert!((0.0..=1.0).contains(&v));
        }
    }
}
