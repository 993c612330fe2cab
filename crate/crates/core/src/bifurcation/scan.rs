use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::ParamFamily;
use super::grid::ScanGrid;
use crate::algebra::C64;
use crate::error::{Error, Result};
use crate::green::DEFAULT_TOL;
use crate::lyapunov::{bj_pairing, exponents, sigma_periodic_approx};
use crate::sampling::{derive_seed, sample_base, sample_equilibrium};

/// Degree cap for per-cell periodic points.
pub const PERIODIC_SCAN_CAP: usize = 1024;

/// Per-cell estimator of `Λ_σ(λ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `log d + ⟨[C_σ], G⟩` over a `μ_θ` sample.
    #[default]
    Formula,
    /// Birkhoff average of the sectional Jacobian over a `μ_f` sample.
    Direct,
}

/// Source of the `μ_θ` sample for the formula estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseSample {
    /// One sample for all cells when `θ` does not depend on `λ`.
    #[default]
    Shared,
    /// An independent sample per cell.
    PerCell,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    pub nx: usize,
    pub ny: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub base_sample: BaseSample,
}

impl ScanParams {
    /// `n × n` grid, default tolerance, formula estimator, shared base sample.
    pub fn new(n: usize, samples: usize, seed: u64) -> Self {
        ScanParams {
            nx: n,
            ny: n,
            samples,
            seed,
            tol: DEFAULT_TOL,
            estimator: Estimator::default(),
            base_sample: BaseSample::default(),
        }
    }
}

fn check_grid(nx: usize, ny: usize) -> Result<()> {
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidArgument(format!("grid {nx}x{ny} is too small (need 3x3)")));
    }
    Ok(())
}

fn fill(mut grid: ScanGrid, cell: impl Fn(usize, C64) -> Result<(f64, f64)> + Sync) -> ScanGrid {
    let results: Vec<Result<(f64, f64)>> = (0..grid.len()).into_par_iter().map(|i| cell(i, grid.param(i))).collect();
    let mut failed = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((v, se)) if v.is_finite() => {
                grid.values[i] = v;
                grid.se[i] = se;
                grid.mask[i] = false;
            }
            Ok(_) => failed += 1,
            Err(e) => {
                failed += 1;
                log::debug!("cell {i} at {} masked: {e}", grid.param(i));
            }
        }
    }
    if failed > 0 {
        log::warn!("{failed} of {} cells masked", grid.len());
    }
    grid
}

/// Seed index of the base sample shared by all cells.
pub const SHARED_BASE_INDEX: u64 = u64::MAX;

/// `Λ_σ(λ)` on the grid, one derived seed per cell; failed cells are masked.
/// With the formula estimator and a `λ`-independent base, every cell pairs
/// against one `μ_θ` sample (common random numbers).
pub fn scan_sigma(family: &ParamFamily, p: &ScanParams) -> Result<ScanGrid> {
    check_grid(p.nx, p.ny)?;
    if p.samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples per cell".into()));
    }
    let grid = ScanGrid::new(p.nx, p.ny, family.domain);
    let shared = if p.estimator == Estimator::Formula && p.base_sample == BaseSample::Shared && family.base_is_fixed() {
        match (0..grid.len()).find_map(|i| family.at(grid.param(i)).ok()) {
            Some(map) => Some(sample_base(&map, p.samples, derive_seed(p.seed, SHARED_BASE_INDEX))?),
            None => None,
        }
    } else {
        None
    };
    Ok(fill(grid, |i, lambda| {
        let map = family.at(lambda)?;
        let seed = derive_seed(p.seed, i as u64);
        match p.estimator {
            Estimator::Formula => {
                let own;
                let base = match &shared {
                    Some(b) => b,
                    None => {
                        own = sample_base(&map, p.samples, seed)?;
                        &own
                    }
                };
                let pairing = bj_pairing(&map, base, p.tol)?;
                Ok(((map.d() as f64).ln() + pairing.value, pairing.se.max(p.tol)))
            }
            Estimator::Direct => {
                let f = sample_equilibrium(&map, p.samples, seed)?;
                let r = exponents(&map, &f, &f.pushforward())?;
                Ok((r.lambda_sigma.value, r.lambda_sigma.se))
            }
        }
    }))
}

/// `Λ_σ,n(λ)` on the grid; deterministic.
pub fn scan_sigma_periodic(family: &ParamFamily, n: usize, nx: usize, ny: usize, tol: f64) -> Result<ScanGrid> {
    check_grid(nx, ny)?;
    let deg = family.d.checked_pow(n as u32).filter(|&v| v <= PERIODIC_SCAN_CAP);
    if deg.is_none() || n == 0 {
        return Err(Error::DegreeOverflow { degree: family.d.saturating_pow(n as u32), cap: PERIODIC_SCAN_CAP });
    }
    let grid = ScanGrid::new(nx, ny, family.domain);
    Ok(fill(grid, |_, lambda| {
        let map = family.at(lambda)?;
        let r = sigma_periodic_approx(&map, n, tol)?;
        if r.excluded_points > 0 {
            return Err(Error::DegenerateFiber(format!("{} degenerate period-{n} fibers", r.excluded_points)));
        }
        Ok((r.value, tol))
    }))
}
