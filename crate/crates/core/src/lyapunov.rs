//! Lyapunov exponents of `μ_f`, `μ_θ` and the fiber direction, per-fiber
//! exponents over base cycles, the periodic approximation of `Λ_σ`, and the
//! critical-Green pairing.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Fiber, ValidatedMap, P1, P2};
use crate::green::{relative_green, AffineEscape, GreenValue};
use crate::sampling::{
    derive_seed, jackknife, periodic_base_points, sample_base, sample_equilibrium, Estimate, SampleSet,
    JACKKNIFE_BLOCKS,
};

/// Jacobians at or below this are treated as sitting on the critical locus.
pub const SINGULAR_JACOBIAN: f64 = 1e-13;
/// Floor for the logarithm of a Jacobian.
pub const LOG_FLOOR: f64 = -690.7755278982137;
/// Largest tolerated fraction of dropped sample points.
pub const MAX_DROP_FRACTION: f64 = 0.01;
/// Root tolerance for critical points on a fiber.
pub const CRITICAL_ROOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exponent {
    pub value: f64,
    pub se: f64,
    pub n: usize,
    pub dropped: usize,
    pub method: &'static str,
}

impl Exponent {
    fn new(e: Estimate, dropped: usize, method: &'static str) -> Self {
        Exponent { value: e.value, se: e.se, n: e.n, dropped, method }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value, se: self.se, n: self.n }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    pub lambda_f: Exponent,
    pub lambda_theta: Exponent,
    pub lambda_sigma: Exponent,
    pub lambda_0: f64,
}

impl ExponentReport {
    /// The two exponents of `μ_f` in increasing order.
    pub fn spectrum(&self) -> [f64; 2] {
        let (a, b) = (self.lambda_theta.value, self.lambda_sigma.value);
        [a.min(b), a.max(b)]
    }
}

fn clipped_log(j: f64) -> Option<f64> {
    (j > SINGULAR_JACOBIAN && j.is_finite()).then(|| j.ln().max(LOG_FLOOR))
}

/// Logs of the sampled values, dropping singular ones.
fn log_estimate(values: &[Option<f64>], weights: &[f64]) -> (Estimate, usize) {
    let (v, w): (Vec<f64>, Vec<f64>) = values.iter().zip(weights).filter_map(|(v, &w)| v.map(|v| (v, w))).unzip();
    (jackknife(&v, &w, JACKKNIFE_BLOCKS), values.len() - v.len())
}

fn check_drops(dropped: usize, total: usize) -> Result<()> {
    if dropped as f64 > MAX_DROP_FRACTION * total as f64 {
        return Err(Error::SingularSample { dropped, total });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} of {total} sample points near the critical locus");
    }
    Ok(())
}

/// `Λ_θ`, `Λ_σ` and `Λ_f` as Birkhoff averages of log Jacobians.
pub fn exponents(map: &ValidatedMap, sample_f: &SampleSet<3>, sample_theta: &SampleSet<2>) -> Result<ExponentReport> {
    if sample_f.is_empty() || sample_theta.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let theta: Vec<Option<f64>> = sample_theta.points.par_iter().map(|y| clipped_log(map.base_derivative(y))).collect();
    let split: Vec<(Option<f64>, Option<f64>)> = sample_f
        .points
        .par_iter()
        .map(|x| {
            let base = x.base().and_then(|y| clipped_log(map.base_derivative(&y)));
            let sigma = clipped_log(map.sectional_jacobian(x));
            (sigma, base.zip(sigma).map(|(b, s)| b + s))
        })
        .collect();
    let sigma: Vec<Option<f64>> = split.iter().map(|s| s.0).collect();
    let total: Vec<Option<f64>> = split.iter().map(|s| s.1).collect();

    let (lt, dt) = log_estimate(&theta, &sample_theta.weights);
    let (ls, ds) = log_estimate(&sigma, &sample_f.weights);
    let (lf, df) = log_estimate(&total, &sample_f.weights);
    check_drops(dt, theta.len())?;
    check_drops(df, total.len())?;
    Ok(ExponentReport {
        lambda_f: Exponent::new(lf, df, "birkhoff-mu-f"),
        lambda_theta: Exponent::new(lt, dt, "birkhoff-mu-theta"),
        lambda_sigma: Exponent::new(ls, ds, "birkhoff-mu-f-sectional"),
        lambda_0: 0.0,
    })
}

/// Roots of `∂R/∂z` on the fiber over `a` as points of P², with multiplicity.
pub fn fiber_critical_points(map: &ValidatedMap, a: &P1) -> Result<Vec<(P2, usize)>> {
    let fiber = Fiber::new(*a);
    let form = map.critical_loci().c_sigma.fiber_form(*fiber.lift());
    if form.degree() == 0 {
        return Ok(Vec::new());
    }
    Ok(form.roots(CRITICAL_ROOT_TOL)?.roots.iter().map(|r| (fiber.point(r.value.to_pair()), r.multiplicity)).collect())
}

/// `Σ mult·G(c)` over the critical points `c` of the fiber map over `a`.
pub fn critical_green_sum(map: &ValidatedMap, a: &P1, tol: f64) -> Result<f64> {
    critical_green_sum_with(map, a, |x| relative_green(map, x, tol))
}

fn critical_green_sum_with(map: &ValidatedMap, a: &P1, green: impl Fn(&P2) -> Result<GreenValue>) -> Result<f64> {
    let fiber = Fiber::new(*a);
    let form = map.critical_loci().c_sigma.fiber_form(*fiber.lift());
    if form.degree() == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for r in form.roots(CRITICAL_ROOT_TOL)?.roots {
        let (c, m) = (fiber.point(r.value.to_pair()), r.multiplicity);
        let g = match green(&c) {
            Err(Error::Infinite) => {
                return Err(Error::DegenerateFiber(format!("critical point at I(pi) over {:?}", a.coords())))
            }
            r => r?,
        };
        sum += m as f64 * g.value;
    }
    Ok(sum)
}

/// Exponent of `fⁿ` on the fiber over a base cycle of length `n`.
pub fn per_fiber_exponent(map: &ValidatedMap, cycle: &[P1], tol: f64) -> Result<f64> {
    if cycle.is_empty() {
        return Err(Error::InvalidArgument("empty cycle".into()));
    }
    let d = map.d() as f64;
    let mut sum = cycle.len() as f64 * d.ln();
    for a in cycle {
        sum += critical_green_sum(map, a, tol)?;
    }
    Ok(sum)
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleExponent {
    pub points: Vec<P1>,
    pub period: usize,
    pub multiplicity: usize,
    pub exponent: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicApprox {
    pub n: usize,
    pub value: f64,
    pub base_points: usize,
    pub excluded_points: usize,
    pub max_residual: f64,
    pub cycles: Vec<CycleExponent>,
}

/// `(1/(n dⁿ)) Σ_{θⁿ(a)=a} Λ(fⁿ|L_a)`; cycles whose fibers degenerate are
/// left out of the sum and listed with their error.
pub fn sigma_periodic_approx(map: &ValidatedMap, n: usize, tol: f64) -> Result<PeriodicApprox> {
    let set = periodic_base_points(map, n)?;
    let d = map.d() as f64;
    let cycles: Vec<CycleExponent> = set
        .cycles
        .par_iter()
        .map(|c| {
            let r = per_fiber_exponent(map, &c.points, tol);
            CycleExponent {
                points: c.points.clone(),
                period: c.period,
                multiplicity: c.multiplicity,
                exponent: r.as_ref().ok().copied(),
                error: r.err().map(|e| e.to_string()),
            }
        })
        .collect();
    let mut sum = 0.0;
    let mut excluded = 0;
    for p in &set.points {
        let c = &cycles[p.cycle];
        match c.exponent {
            Some(e) => sum += p.multiplicity as f64 * (n / c.period) as f64 * e,
            None => excluded += p.multiplicity,
        }
    }
    for c in cycles.iter().filter(|c| c.error.is_some()) {
        log::warn!("period-{} cycle excluded: {}", c.period, c.error.as_deref().unwrap_or(""));
    }
    if excluded == set.total_multiplicity() {
        return Err(Error::DegenerateFiber(format!("every period-{n} fiber is degenerate")));
    }
    Ok(PeriodicApprox {
        n,
        value: sum / (n as f64 * d.powi(n as i32)),
        base_points: set.total_multiplicity(),
        excluded_points: excluded,
        max_residual: set.max_residual(),
        cycles,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Pairing {
    pub value: f64,
    pub se: f64,
    pub n: usize,
    pub dropped: usize,
    /// Smallest per-fiber summand seen.
    pub min_summand: f64,
}

impl Pairing {
    pub fn estimate(&self) -> Estimate {
        Estimate { value: self.value, se: self.se, n: self.n }
    }
}

/// `∫ Σ_{c ∈ C_σ ∩ L_a} G(c) dμ_θ(a)` over a base sample. Skew products
/// evaluate `G` by affine escape time.
pub fn bj_pairing(map: &ValidatedMap, sample_theta: &SampleSet<2>, tol: f64) -> Result<Pairing> {
    if sample_theta.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let fast = AffineEscape::new(map, tol);
    let green = |x: &P2| match &fast {
        Some(f) => f.green_at(map, x),
        None => relative_green(map, x, tol),
    };
    let sums: Vec<Option<f64>> = sample_theta
        .points
        .par_iter()
        .map(|a| match critical_green_sum_with(map, a, green) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(_) | Err(Error::DegenerateFiber(_) | Error::NonConvergence { .. }) => None,
            Err(e) => {
                log::error!("pairing failed at {:?}: {e}", a.coords());
                None
            }
        })
        .collect();
    let (v, w): (Vec<f64>, Vec<f64>) =
        sums.iter().zip(&sample_theta.weights).filter_map(|(v, &w)| v.map(|v| (v, w))).unzip();
    let dropped = sums.len() - v.len();
    check_drops(dropped, sums.len())?;
    let e = jackknife(&v, &w, JACKKNIFE_BLOCKS);
    Ok(Pairing {
        value: e.value,
        se: e.se,
        n: e.n,
        dropped,
        min_summand: v.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BJReport {
    pub lambda_sigma_direct: Estimate,
    pub pairing: Pairing,
    pub lambda_sigma_formula: Estimate,
    pub discrepancy: f64,
    pub discrepancy_se: f64,
    pub exponents: ExponentReport,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
}

impl BJReport {
    /// `|discrepancy| ≤ k·SE`.
    pub fn within(&self, k: f64) -> bool {
        self.discrepancy.abs() <= k * self.discrepancy_se
    }
}

/// Direct `Λ_σ` against `log d + Λ₀ + pairing` on independent samples.
pub fn bj_check(map: &ValidatedMap, samples: usize, seed: u64, tol: f64) -> Result<BJReport> {
    let sample_f = sample_equilibrium(map, samples, derive_seed(seed, 0))?;
    let sample_theta = sample_base(map, samples, derive_seed(seed, 1))?;
    let exponents = exponents(map, &sample_f, &sample_theta)?;
    let pairing = bj_pairing(map, &sample_theta, tol)?;
    let direct = exponents.lambda_sigma.estimate();
    let log_d = (map.d() as f64).ln();
    let formula = Estimate { value: log_d + exponents.lambda_0 + pairing.value, se: pairing.se, n: pairing.n };
    Ok(BJReport {
        lambda_sigma_direct: direct,
        pairing,
        lambda_sigma_formula: formula,
        discrepancy: direct.value - formula.value,
        discrepancy_se: direct.combined_se(&formula),
        exponents,
        seed,
        samples,
        tol,
    })
}
