use rayon::prelude::*;
use serde::Serialize;

use super::{
    derive_seed, jackknife, sample_base, sample_equilibrium, sample_fiber_measure, Estimate, SampleSet, TestFunction,
    CHAIN_DEPTH, JACKKNIFE_BLOCKS, P2_FAMILY,
};
use crate::error::Result;
use crate::geometry::{ValidatedMap, PREIMAGE_TOL};

/// Absolute slack from the preimage solver; dominates when the integrand is
/// constant on the support and the SE vanishes.
pub const ROUNDOFF_FLOOR: f64 = 10.0 * PREIMAGE_TOL;

#[derive(Clone, Debug, Serialize)]
pub struct DecompRow {
    pub exps: [u32; 3],
    /// `∫φ dμ̂_f`.
    pub direct: Estimate,
    /// `∫(∫φ dμ̂_a) dμ̂_θ(a)`.
    pub nested: Estimate,
    pub combined_se: f64,
    /// `|direct − nested| ≤ 3·combined SE + ROUNDOFF_FLOOR`.
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecompReport {
    pub rows: Vec<DecompRow>,
    pub seed: u64,
    pub direct_samples: usize,
    pub base_samples: usize,
    pub fiber_samples: usize,
    pub passed: bool,
}

/// Direct vs nested integrals of the P² test functions. Streams:
/// `μ_f` from `derive_seed(seed, 0)`, `μ_θ` from `derive_seed(seed, 1)`,
/// fiber `i` from `derive_seed(derive_seed(seed, 2), i)`.
pub fn decomposition_check(
    map: &ValidatedMap,
    direct_samples: usize,
    base_samples: usize,
    fiber_samples: usize,
    seed: u64,
) -> Result<DecompReport> {
    let direct = sample_equilibrium(map, direct_samples, derive_seed(seed, 0))?;
    let base = sample_base(map, base_samples, derive_seed(seed, 1))?;
    let fiber_seed = derive_seed(seed, 2);
    let fibers: Vec<SampleSet<3>> = base
        .points
        .par_iter()
        .enumerate()
        .map(|(i, a)| sample_fiber_measure(map, a, fiber_samples, derive_seed(fiber_seed, i as u64), CHAIN_DEPTH))
        .collect::<Result<_>>()?;
    let row = |phi: TestFunction<3>| {
        let d = direct.integrate(|p| phi.eval(p));
        let means: Vec<f64> = fibers.iter().map(|s| s.integrate(|p| phi.eval(p)).value).collect();
        let nested = jackknife(&means, &base.weights, JACKKNIFE_BLOCKS);
        let combined_se = d.combined_se(&nested);
        DecompRow {
            exps: phi.exps,
            direct: d,
            nested,
            combined_se,
            passed: (d.value - nested.value).abs() <= 3.0 * combined_se + ROUNDOFF_FLOOR,
        }
    };
    let rows: Vec<DecompRow> = P2_FAMILY.into_iter().map(row).collect();
    let passed = rows.iter().all(|r| r.passed);
    Ok(DecompReport { rows, seed, direct_samples, base_samples, fiber_samples, passed })
}
