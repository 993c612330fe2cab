use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{GreenPlane, Measure, RunConfig};
use crate::algebra::C64;
use crate::bifurcation::{
    bif_compare, gaussian_blur, laplacian_density, scan_sigma, scan_sigma_periodic, sub_mean_value_fraction,
    ParamFamily, ScanGrid, ScanParams,
};
use crate::error::{Error, Result};
use crate::geometry::{FiberedMap, ProjPoint, ValidatedMap, P1, P2};
use crate::green::{green_theta, relative_green};
use crate::lyapunov::{bj_check, exponents, sigma_periodic_approx};
use crate::sampling::{
    decomposition_check, derive_seed, sample_base, sample_equilibrium, sample_fiber_measure, SampleSet, TestFunction,
    CHAIN_DEPTH, P1_FAMILY, P2_FAMILY,
};

/// Trapping certificate parameters used by `validate`.
const TRAP_SAMPLES: usize = 2000;
const TRAP_EPS_MIN: f64 = 1e-6;

/// Result of a subcommand before it is written out.
pub struct Outcome {
    pub passed: bool,
    pub result: Value,
    /// `(file suffix, bytes)`.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn new(passed: bool, result: impl Serialize) -> Result<Self> {
        Ok(Outcome { passed, result: serde_json::to_value(result)?, artifacts: Vec::new() })
    }

    fn with(mut self, suffix: &str, bytes: Vec<u8>) -> Self {
        self.artifacts.push((suffix.into(), bytes));
        self
    }
}

/// Resolved inputs of a run.
pub struct Inputs<'a> {
    pub config: &'a RunConfig,
    pub map: Option<FiberedMap>,
    pub family: Option<ParamFamily>,
    pub seed: u64,
}

impl Inputs<'_> {
    fn map(&self) -> Result<ValidatedMap> {
        self.map.clone().ok_or_else(|| Error::Config("this subcommand needs \"map\"".into()))?.validated()
    }

    fn family(&self) -> Result<&ParamFamily> {
        self.family.as_ref().ok_or_else(|| Error::Config("this subcommand needs \"family\"".into()))
    }
}

#[derive(Serialize)]
struct Band {
    name: String,
    value: f64,
    se: f64,
    /// The check passes when `value` is on the right side of `limit`.
    limit: f64,
    passed: bool,
}

pub fn validate(inp: &Inputs) -> Result<Outcome> {
    if inp.map.is_none() && inp.family.is_none() {
        return Err(Error::Config("validate needs \"map\" or \"family\"".into()));
    }
    let mut result = json!({});
    let mut passed = true;
    if let Some(m) = &inp.map {
        let report = m.validate();
        if !report.passed {
            return Err(Error::Validation(Box::new(report)));
        }
        let vm = m.clone().validated()?;
        let trap = vm.trapping_epsilon(TRAP_SAMPLES, inp.seed, TRAP_EPS_MIN);
        passed &= trap.is_ok();
        result["map"] = json!({
            "checks": report.checks,
            "trapping": {
                "epsilon": trap.as_ref().ok(),
                "samples": TRAP_SAMPLES,
                "eps_min": TRAP_EPS_MIN,
                "error": trap.as_ref().err().map(|e| e.to_string()),
            },
        });
    }
    if let Some(f) = &inp.family {
        let probed = f.probed()?;
        result["family"] = json!({ "name": f.name, "domain": f.domain, "probed_domain": probed.domain });
    }
    Outcome::new(passed, result)
}

fn green_csv(g: &ScanGrid) -> String {
    let mut s = String::from("ix,iy,re,im,value,bound\n");
    for i in 0..g.len() {
        let (ix, iy) = g.coords(i);
        let l = g.param(i);
        let _ = writeln!(s, "{ix},{iy},{},{},{},{}", l.re, l.im, g.values[i], g.se[i]);
    }
    s
}

pub fn green(inp: &Inputs) -> Result<Outcome> {
    let map = inp.map()?;
    let p = &inp.config.green;
    let tol = inp.config.tol;
    let mut grid = ScanGrid::new(p.nx, p.ny, p.rect);
    let t = C64::new(p.t[0], p.t[1]);
    let values: Vec<_> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let w = grid.param(i);
            match p.plane {
                GreenPlane::Fiber => relative_green(&map, &P2::from_affine(t, w), tol),
                GreenPlane::Base => green_theta(&map, &[w, C64::new(1.0, 0.0)], tol),
            }
        })
        .collect();
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        grid.values[i] = v.value;
        grid.se[i] = v.truncation_bound;
        grid.mask[i] = false;
    }
    let max_bound = grid.se.iter().copied().fold(0.0, f64::max);
    let min = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = grid.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut result = json!({
        "plane": p.plane,
        "t": p.t,
        "rect": p.rect,
        "nx": p.nx,
        "ny": p.ny,
        "min": { "value": min, "bound": max_bound },
        "max": { "value": max, "bound": max_bound },
        "max_truncation_bound": max_bound,
        "tol": tol,
    });
    let mut out = Outcome::new(max_bound <= tol, Value::Null)?.with("csv", green_csv(&grid).into_bytes());
    if p.pgm {
        let (bytes, mapping) = grid.to_pgm(None);
        result["pgm"] = serde_json::to_value(mapping)?;
        out = out.with("pgm", bytes);
    }
    out.result = result;
    Ok(out)
}

fn points_csv<const N: usize>(s: &SampleSet<N>) -> String {
    let mut out = String::new();
    for k in 0..N {
        let _ = write!(out, "x{k}_re,x{k}_im,");
    }
    out.push_str("weight\n");
    for (p, w) in s.points.iter().zip(&s.weights) {
        for c in p.coords() {
            let _ = write!(out, "{},{},", c.re, c.im);
        }
        let _ = writeln!(out, "{w}");
    }
    out
}

fn moments<const N: usize>(s: &SampleSet<N>, family: &[TestFunction<N>]) -> Value {
    family
        .iter()
        .map(|phi| json!({ "exps": phi.exps.as_slice(), "estimate": s.integrate(|x: &ProjPoint<N>| phi.eval(x)) }))
        .collect()
}

fn sample_outcome<const N: usize>(s: &SampleSet<N>, family: &[TestFunction<N>], measure: Measure) -> Result<Outcome> {
    let result = json!({
        "measure": measure,
        "samples": s.len(),
        "seed": s.seed,
        "burn_in": s.burn_in,
        "method": s.method,
        "moments": moments(s, family),
    });
    Ok(Outcome::new(true, result)?.with("csv", points_csv(s).into_bytes()))
}

pub fn sample(inp: &Inputs) -> Result<Outcome> {
    let map = inp.map()?;
    let p = &inp.config.sample;
    match p.measure {
        Measure::Theta => sample_outcome(&sample_base(&map, p.samples, inp.seed)?, &P1_FAMILY, p.measure),
        Measure::F => sample_outcome(&sample_equilibrium(&map, p.samples, inp.seed)?, &P2_FAMILY, p.measure),
        Measure::Fiber => {
            let a = P1::from_affine(C64::new(p.fiber[0], p.fiber[1]));
            let s = sample_fiber_measure(&map, &a, p.samples, inp.seed, CHAIN_DEPTH)?;
            sample_outcome(&s, &P2_FAMILY, p.measure)
        }
    }
}

pub fn lyapunov(inp: &Inputs) -> Result<Outcome> {
    let map = inp.map()?;
    let p = &inp.config.lyapunov;
    let f = sample_equilibrium(&map, p.samples, derive_seed(inp.seed, 0))?;
    let theta = sample_base(&map, p.samples, derive_seed(inp.seed, 1))?;
    let r = exponents(&map, &f, &theta)?;
    let log_d = (map.d() as f64).ln();
    let lower = |name: &str, e: &crate::lyapunov::Exponent, bound: f64| Band {
        name: name.into(),
        value: e.value,
        se: e.se,
        limit: bound - p.k * e.se,
        passed: e.value >= bound - p.k * e.se,
    };
    let bands = vec![
        lower("lambda_sigma >= log d", &r.lambda_sigma, log_d),
        lower("lambda_theta >= log(d)/2", &r.lambda_theta, 0.5 * log_d),
    ];
    let passed = bands.iter().all(|b| b.passed);
    Outcome::new(passed, json!({ "exponents": r, "lower_bounds": bands, "k": p.k }))
}

pub fn bj(inp: &Inputs) -> Result<Outcome> {
    let map = inp.map()?;
    let p = &inp.config.bj_check;
    let r = bj_check(&map, p.samples, inp.seed, inp.config.tol)?;
    let limit = p.k * r.discrepancy_se + p.floor;
    let band = Band {
        name: "|discrepancy| <= k*se + floor".into(),
        value: r.discrepancy,
        se: r.discrepancy_se,
        limit,
        passed: r.discrepancy.abs() <= limit,
    };
    Outcome::new(band.passed, json!({ "report": r, "band": band }))
}

pub fn periodic(inp: &Inputs) -> Result<Outcome> {
    let map = inp.map()?;
    let p = &inp.config.periodic_check;
    let tol = inp.config.tol;
    let f = sample_equilibrium(&map, p.samples, derive_seed(inp.seed, 0))?;
    let theta = sample_base(&map, p.samples, derive_seed(inp.seed, 1))?;
    let direct = exponents(&map, &f, &theta)?.lambda_sigma;
    let mut rows = Vec::new();
    let mut previous: Option<f64> = None;
    let mut monotone = true;
    for &n in &p.n {
        let a = sigma_periodic_approx(&map, n, tol)?;
        let gap = (a.value - direct.value).abs();
        let step_ok = previous.is_none_or(|g| gap <= g + p.k * direct.se);
        monotone &= step_ok;
        previous = Some(gap);
        rows.push(json!({
            "n": n,
            "value": a.value,
            "bound": tol,
            "base_points": a.base_points,
            "excluded_points": a.excluded_points,
            "max_residual": a.max_residual,
            "gap": { "value": gap, "se": direct.se },
            "nonincreasing": step_ok,
        }));
    }
    let last = previous.unwrap_or(f64::NAN);
    let limit = p.band + p.k * direct.se;
    let band = Band {
        name: "|lambda_sigma_n - lambda_sigma| <= band + k*se at the largest n".into(),
        value: last,
        se: direct.se,
        limit,
        passed: last <= limit,
    };
    let passed = band.passed && monotone;
    Outcome::new(passed, json!({ "direct": direct, "rows": rows, "band": band, "monotone": monotone }))
}

pub fn decomp(inp: &Inputs) -> Result<Outcome> {
    let map = inp.map()?;
    let p = &inp.config.decomp_check;
    let r = decomposition_check(&map, p.direct_samples, p.base_samples, p.fiber_samples, inp.seed)?;
    Outcome::new(r.passed, r)
}

pub fn bif_scan(inp: &Inputs) -> Result<Outcome> {
    let p = &inp.config.bif_scan;
    let tol = inp.config.tol;
    let mut family = inp.family()?.clone();
    if let Some(r) = p.domain {
        family.domain = r;
    }
    let family = family.probed()?;
    let potential = match p.periodic_n {
        Some(n) => scan_sigma_periodic(&family, n, p.nx, p.ny, tol)?,
        None => {
            let params = ScanParams {
                nx: p.nx,
                ny: p.ny,
                samples: p.samples,
                seed: inp.seed,
                tol,
                estimator: p.estimator,
                base_sample: p.base_sample,
            };
            scan_sigma(&family, &params)?
        }
    };
    if potential.unmasked() == 0 {
        return Err(Error::DegenerateFiber("every scan cell failed".into()));
    }
    let smoothed = gaussian_blur(&potential, p.blur);
    let density = laplacian_density(&smoothed);
    let submean = sub_mean_value_fraction(&smoothed, &density);
    let (hx, hy) = potential.spacing();
    let mass = density.positive_mass(|_| true);
    let mass_bound: f64 =
        (0..density.grid.len()).filter(|&i| !density.grid.mask[i]).map(|i| density.grid.se[i] * hx * hy).sum();
    let violation_fraction = density.violation_fraction();
    let mut passed = violation_fraction <= p.max_violation_fraction;
    let (pgm, mapping) = density.grid.to_pgm(None);
    let max_se = (0..potential.len()).filter(|&i| !potential.mask[i]).map(|i| potential.se[i]).fold(0.0, f64::max);
    let mut result = json!({
        "family": family.name,
        "domain": family.domain,
        "nx": p.nx,
        "ny": p.ny,
        "samples_per_cell": p.samples,
        "estimator": if p.periodic_n.is_some() { json!("periodic") } else { json!(p.estimator) },
        "periodic_n": p.periodic_n,
        "base_sample": p.base_sample,
        "blur": p.blur,
        "cells": potential.len(),
        "masked_cells": potential.len() - potential.unmasked(),
        "max_cell_se": max_se,
        "density_cells": density.defined(),
        "violations": density.violations(),
        "violation_fraction": violation_fraction,
        "max_violation_fraction": p.max_violation_fraction,
        "sub_mean_value_fraction": submean,
        "positive_mass": { "value": mass, "bound": mass_bound },
        "pgm": mapping,
    });
    let mut out = Outcome::new(false, Value::Null)?
        .with("potential.csv", potential.to_csv().into_bytes())
        .with("density.csv", density.grid.to_csv().into_bytes())
        .with("density.pgm", pgm);
    if let Some(c) = &p.compare {
        if p.periodic_n.is_some() {
            return Err(Error::Config("bif_scan.compare needs the direct scan (drop periodic_n)".into()));
        }
        let mut periodic = Vec::new();
        for &n in &c.n {
            let g = scan_sigma_periodic(&family, n, p.nx, p.ny, tol)?;
            out = out.with(&format!("periodic-n{n}.csv"), g.to_csv().into_bytes());
            periodic.push((n, gaussian_blur(&g, p.blur)));
        }
        let rows = bif_compare(&smoothed, &periodic, &c.bump)?;
        let last = rows.last().map_or(f64::NAN, |r| r.relative_gap.abs());
        let ok = last <= c.relative_band;
        passed &= ok;
        result["compare"] = json!({
            "bump": c.bump,
            "rows": rows,
            "relative_band": c.relative_band,
            "passed": ok,
        });
    }
    out.passed = passed;
    out.result = result;
    Ok(out)
}
