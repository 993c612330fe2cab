use serde::Serialize;

use crate::algebra::{aberth_refine, cluster, BinaryForm, RootValue, C64};
use crate::error::{Error, Result};
use crate::geometry::{ValidatedMap, P1};

/// Chordal bound on `θⁿ(a)` vs `a` for an accepted periodic point.
pub const PERIODIC_TOL: f64 = 1e-8;
const DEGREE_CAP: usize = 4096;
const REFINE_ITER: usize = 300;
const LINK_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicPoint {
    pub point: P1,
    pub multiplicity: usize,
    pub residual: f64,
    pub cycle: usize,
}

/// Base cycle `a, θ(a), …` of exact period `period`.
#[derive(Clone, Debug, Serialize)]
pub struct Cycle {
    pub points: Vec<P1>,
    pub period: usize,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeriodicSet {
    pub n: usize,
    pub points: Vec<PeriodicPoint>,
    pub cycles: Vec<Cycle>,
}

impl PeriodicSet {
    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.multiplicity).sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

fn iterate_base(map: &ValidatedMap, y: &P1, n: usize) -> P1 {
    let mut y = *y;
    for _ in 0..n {
        y = map.apply_base(&y);
    }
    y
}

/// Fixed points of `θⁿ` on P¹ with multiplicity, grouped into cycles.
pub fn periodic_base_points(map: &ValidatedMap, n: usize) -> Result<PeriodicSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    let d = map.d();
    let deg = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d).filter(|&v| v <= DEGREE_CAP));
    let Some(_) = deg else {
        return Err(Error::DegreeOverflow { degree: d.saturating_pow(n as u32), cap: DEGREE_CAP });
    };
    let [t0, t1] = map.theta();

    // Seeds from the expanded fixed-point form s₁Θⁿ₀ − s₀Θⁿ₁.
    let (mut a, mut b) = (t0.clone(), t1.clone());
    for _ in 1..n {
        let na = t0.compose(&a, &b, DEGREE_CAP)?;
        let nb = t1.compose(&a, &b, DEGREE_CAP)?;
        a = na;
        b = nb;
    }
    let s0 = BinaryForm::from_real(&[1.0, 0.0]);
    let s1 = BinaryForm::from_real(&[0.0, 1.0]);
    let form = a.mul(&s1).add(&b.mul(&s0).scale(C64::new(-1.0, 0.0)))?;
    let seeds = form.roots(f64::INFINITY)?;

    let mut k_inf = 0;
    let mut z = Vec::new();
    for r in &seeds.roots {
        match r.value {
            RootValue::Infinity => k_inf += r.multiplicity,
            RootValue::Finite(t) => {
                for j in 0..r.multiplicity {
                    let jitter = if r.multiplicity > 1 {
                        C64::from_polar(
                            1e-6 * t.norm().max(1.0),
                            std::f64::consts::TAU * j as f64 / r.multiplicity as f64,
                        )
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    z.push(t + jitter);
                }
            }
        }
    }

    // Polish on h(t) = Θⁿ₀(t,1) − t·Θⁿ₁(t,1), evaluated by iteration.
    let grads = [[t0.derivative(0), t0.derivative(1)], [t1.derivative(0), t1.derivative(1)]];
    let ratio = |t: C64| {
        let one = C64::new(1.0, 0.0);
        let mut v = [t, one];
        let mut dv = [one, C64::new(0.0, 0.0)];
        for _ in 0..n {
            let nv = [t0.eval(v[0], v[1]), t1.eval(v[0], v[1])];
            let mut ndv = [C64::new(0.0, 0.0); 2];
            for k in 0..2 {
                ndv[k] = grads[k][0].eval(v[0], v[1]) * dv[0] + grads[k][1].eval(v[0], v[1]) * dv[1];
            }
            let s = nv[0].norm().max(nv[1].norm());
            v = [nv[0] / s, nv[1] / s];
            dv = [ndv[0] / s, ndv[1] / s];
        }
        let h = v[0] - t * v[1];
        let dh = dv[0] - v[1] - t * dv[1];
        h / dh
    };
    let z = aberth_refine(z, ratio, 1e-15, REFINE_ITER);

    let mut found: Vec<(P1, usize)> =
        cluster(&z).into_iter().map(|(t, m)| Ok((P1::new([t, C64::new(1.0, 0.0)])?, m))).collect::<Result<_>>()?;
    if k_inf > 0 {
        found.push((P1::infinity(), k_inf));
    }

    let residuals: Vec<f64> = found.iter().map(|(p, _)| iterate_base(map, p, n).chordal(p)).collect();
    let bad: Vec<f64> = residuals.iter().copied().filter(|r| !(*r <= PERIODIC_TOL)).collect();
    if !bad.is_empty() {
        return Err(Error::NonConvergence {
            unpolished: bad.len(),
            tol: PERIODIC_TOL,
            worst: bad.iter().copied().fold(0.0, f64::max),
        });
    }

    // Link each point to the nearest point of θ's image.
    let m = found.len();
    let mut next = vec![0; m];
    for i in 0..m {
        let img = map.apply_base(&found[i].0);
        let (j, dist) =
            (0..m)
                .map(|j| (j, img.chordal(&found[j].0)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if dist > LINK_TOL {
            return Err(Error::NonConvergence { unpolished: 1, tol: LINK_TOL, worst: dist });
        }
        next[i] = j;
    }
    let mut cycle_of = vec![usize::MAX; m];
    let mut cycles = Vec::new();
    for start in 0..m {
        if cycle_of[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        let mut j = next[start];
        while j != start && members.len() <= n {
            members.push(j);
            j = next[j];
        }
        if j != start || !n.is_multiple_of(members.len()) || members.iter().any(|&k| cycle_of[k] != usize::MAX) {
            return Err(Error::NonConvergence { unpolished: members.len(), tol: LINK_TOL, worst: f64::NAN });
        }
        let id = cycles.len();
        for &k in &members {
            cycle_of[k] = id;
        }
        cycles.push(Cycle {
            points: members.iter().map(|&k| found[k].0).collect(),
            period: members.len(),
            multiplicity: found[start].1,
        });
    }

    let points = found
        .into_iter()
        .zip(residuals)
        .enumerate()
        .map(|(i, ((point, multiplicity), residual))| PeriodicPoint {
            point,
            multiplicity,
            residual,
            cycle: cycle_of[i],
        })
        .collect();
    Ok(PeriodicSet { n, points, cycles })
}
