//! Backward-orbit samplers for `μ_θ`, `μ_f` and fiber measures, periodic
//! points of the base, and jackknife integration.

mod decomp;
mod periodic;
mod stats;

pub use decomp::{decomposition_check, DecompReport, DecompRow, ROUNDOFF_FLOOR};
pub use periodic::{periodic_base_points, Cycle, PeriodicPoint, PeriodicSet, PERIODIC_TOL};
pub use stats::{jackknife, Estimate, JACKKNIFE_BLOCKS};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{cabs, C64};
use crate::error::{Error, Result};
use crate::geometry::{norm2, Fiber, ProjPoint, ValidatedMap, P1, P2};

pub const BURN_IN: usize = 30;
pub const CHAIN_DEPTH: usize = 25;
/// Base points this close (chordally) to a critical point of `θ` are moved.
pub const CRITICAL_EXCLUSION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMethod {
    BackwardOrbit,
    PeriodicAverage,
    FiberChain,
}

/// Weighted empirical measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSet<const N: usize> {
    pub points: Vec<ProjPoint<N>>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub burn_in: usize,
    pub method: SampleMethod,
}

impl<const N: usize> SampleSet<N> {
    pub fn uniform(points: Vec<ProjPoint<N>>, seed: u64, burn_in: usize, method: SampleMethod) -> Self {
        let w = 1.0 / points.len() as f64;
        let weights = vec![w; points.len()];
        SampleSet { points, weights, seed, burn_in, method }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Concatenate and renormalise the weights to sum 1.
    pub fn merge(sets: &[SampleSet<N>]) -> Result<SampleSet<N>> {
        let first = sets.first().ok_or_else(|| Error::InvalidArgument("nothing to merge".into()))?;
        let total: f64 = sets.iter().flat_map(|s| &s.weights).sum();
        Ok(SampleSet {
            points: sets.iter().flat_map(|s| s.points.iter().copied()).collect(),
            weights: sets.iter().flat_map(|s| s.weights.iter().map(|w| w / total)).collect(),
            seed: first.seed,
            burn_in: first.burn_in,
            method: first.method,
        })
    }

    /// Weighted mean of `f` with a 50-block jackknife standard error.
    pub fn integrate(&self, f: impl Fn(&ProjPoint<N>) -> f64) -> Estimate {
        let values: Vec<f64> = self.points.iter().map(f).collect();
        jackknife(&values, &self.weights, JACKKNIFE_BLOCKS)
    }
}

impl SampleSet<3> {
    /// `π_*` of the sample; points on `I(π)` are dropped.
    pub fn pushforward(&self) -> SampleSet<2> {
        let (points, weights): (Vec<P1>, Vec<f64>) =
            self.points.iter().zip(&self.weights).filter_map(|(p, &w)| p.base().map(|b| (b, w))).unzip();
        let total: f64 = weights.iter().sum();
        SampleSet {
            points,
            weights: weights.iter().map(|w| w / total).collect(),
            seed: self.seed,
            burn_in: self.burn_in,
            method: self.method,
        }
    }
}

/// `φ(X) = ∏|x_i|^(2e_i) / ‖X‖₂^(2Σe_i)` on P^(N−1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestFunction<const N: usize> {
    pub exps: [u32; N],
}

impl<const N: usize> TestFunction<N> {
    pub fn new(exps: [u32; N]) -> Self {
        TestFunction { exps }
    }

    pub fn eval(&self, x: &ProjPoint<N>) -> f64 {
        let c = x.coords();
        let n2 = norm2(c).powi(2);
        let mut v = 1.0;
        for i in 0..N {
            v *= (c[i].norm_sqr() / n2).powi(self.exps[i] as i32);
        }
        v
    }
}

/// Test functions on P¹ used for pushforward and fiber-invariance checks.
pub const P1_FAMILY: [TestFunction<2>; 5] = [
    TestFunction { exps: [1, 0] },
    TestFunction { exps: [2, 0] },
    TestFunction { exps: [1, 1] },
    TestFunction { exps: [3, 0] },
    TestFunction { exps: [0, 3] },
];

/// Test functions on P² used for the decomposition check.
pub const P2_FAMILY: [TestFunction<3>; 6] = [
    TestFunction { exps: [0, 0, 1] },
    TestFunction { exps: [1, 0, 0] },
    TestFunction { exps: [0, 1, 0] },
    TestFunction { exps: [1, 0, 1] },
    TestFunction { exps: [0, 1, 1] },
    TestFunction { exps: [0, 0, 2] },
];

/// SplitMix64 finalizer of `seed` mixed with `index`; used to give
/// sub-computations and grid cells independent streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn disk<R: Rng>(rng: &mut R, radius: f64) -> C64 {
    C64::from_polar(radius * rng.random::<f64>().sqrt(), rng.random::<f64>() * std::f64::consts::TAU)
}

/// `μ_θ` by a uniformly chosen backward orbit on P¹.
pub fn sample_base(map: &ValidatedMap, n: usize, seed: u64) -> Result<SampleSet<2>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = P1::new([disk(&mut rng, 2.0), C64::new(1.0, 0.0)])?;
    let mut points = Vec::with_capacity(n);
    for k in 0..BURN_IN + n {
        y = map.random_base_preimage(&y, &mut rng)?;
        if k >= BURN_IN {
            points.push(y);
        }
    }
    Ok(SampleSet::uniform(points, seed, BURN_IN, SampleMethod::BackwardOrbit))
}

/// `μ_f` by a uniformly chosen backward orbit on P².
pub fn sample_equilibrium(map: &ValidatedMap, n: usize, seed: u64) -> Result<SampleSet<3>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = P2::new([disk(&mut rng, 2.0), C64::new(1.0, 0.0), disk(&mut rng, 2.0)])?;
    let mut points = Vec::with_capacity(n);
    for k in 0..BURN_IN + n {
        x = map.random_preimage(&x, &mut rng)?;
        if k >= BURN_IN {
            points.push(x);
        }
    }
    Ok(SampleSet::uniform(points, seed, BURN_IN, SampleMethod::BackwardOrbit))
}

/// Critical points of `θ` on P¹.
pub fn base_critical_points(map: &ValidatedMap) -> Result<Vec<P1>> {
    let crit = &map.critical_loci().crit_theta;
    Ok(crit.roots(1e-6)?.roots.iter().map(|r| P1::new(r.value.to_pair()).expect("finite")).collect())
}

/// Moves `a` off the critical set of `θ` if it is within
/// [`CRITICAL_EXCLUSION`]; returns the point used.
pub fn exclude_critical(map: &ValidatedMap, a: &P1) -> Result<P1> {
    let crit = base_critical_points(map)?;
    if crit.iter().any(|c| c.chordal(a) < CRITICAL_EXCLUSION) {
        let c = a.coords();
        let moved = P1::new([c[0] + C64::new(1e-5, 1e-5), c[1]])?;
        log::warn!("fiber base point {:?} is critical for the base map; moved to {:?}", c, moved.coords());
        return Ok(moved);
    }
    Ok(*a)
}

/// The base orbit is collapsing onto ∞ faster than floats can follow.
fn underflows(cur: &[C64; 2], next: &[C64; 2]) -> bool {
    let (c, n) = (cabs(cur[1]), cabs(next[1]));
    (n > 0.0 && n < 1e-150) || (n == 0.0 && c > 0.0 && c < 1e-20)
}

/// `μ_a` on the fiber over `a`: each point pulls a random fiber point back
/// along the chain of fibers over `a, θ(a), …, θ^depth(a)`.
pub fn sample_fiber_measure(map: &ValidatedMap, a: &P1, n: usize, seed: u64, depth: usize) -> Result<SampleSet<3>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be positive".into()));
    }
    let a = exclude_critical(map, a)?;
    let mut fibers = vec![Fiber::new(a)];
    let mut truncated = false;
    for k in 0..depth {
        let next = Fiber::new(map.apply_base(fibers[k].base()));
        if underflows(fibers[k].lift(), next.lift()) {
            truncated = true;
            break;
        }
        fibers.push(next);
    }
    if truncated {
        log::warn!(
            "fiber chain over {:?} cut at depth {} (base orbit leaves float range)",
            a.coords(),
            fibers.len() - 1
        );
    }
    let depth = fibers.len() - 1;
    let top = *fibers[depth].lift();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let z = disk(&mut rng, 2.0);
        let ab = if truncated {
            [C64::new(1.0, 0.0), z * cabs(top[1]).max(f64::MIN_POSITIVE)]
        } else {
            [C64::new(1.0, 0.0), z]
        };
        let mut ab = ab;
        for k in (0..depth).rev() {
            ab = map.random_fiber_preimage(&fibers[k], &fibers[k + 1], ab, &mut rng)?;
        }
        let p = fibers[0].point(ab);
        if p.is_indeterminacy() {
            return Err(Error::DegenerateFiber("fiber chain reached I(pi)".into()));
        }
        points.push(p);
    }
    Ok(SampleSet::uniform(points, seed, depth, SampleMethod::FiberChain))
}
