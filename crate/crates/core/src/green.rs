//! Escape-rate Green functions `G_Θ`, `G_F`, the relative Green function
//! `G = G_F − G_Θ` and Green functions of periodic fibers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{cdiv, BinaryForm, TernaryForm, C64};
use crate::error::{Error, Result};
use crate::geometry::{norm_inf, Fiber, ValidatedMap, P1, P2};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const ITERATION_CAP: usize = 200;
const SPHERE_SAMPLES: usize = 10_000;
const SPHERE_INFLATION: f64 = 2.0;
const SPHERE_SEED: u64 = 0x5EED_6EE7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub truncation_bound: f64,
    pub iterations_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectMethod {
    CoefficientBound,
    SphereSample,
}

/// Bound `M ≥ sup_{‖X‖∞=1} |log‖F(X)‖∞|` for the normalised lift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EscapeDefect {
    pub m: f64,
    pub method: DefectMethod,
}

/// The lift divided by `c₀ = max_k ‖F_k‖₁` together with escape defects.
#[derive(Clone, Debug)]
pub struct EscapeData {
    pub log_scale: f64,
    theta: [BinaryForm; 2],
    r: TernaryForm,
    pub defect_f: EscapeDefect,
    pub defect_theta: EscapeDefect,
}

fn unit_disk<R: Rng>(rng: &mut R) -> C64 {
    C64::from_polar(rng.random::<f64>().sqrt(), rng.random::<f64>() * std::f64::consts::TAU)
}

impl EscapeData {
    fn scaled(map: &ValidatedMap) -> (f64, [BinaryForm; 2], TernaryForm) {
        let [t0, t1] = map.theta();
        let c0 = t0.norm1().max(t1.norm1()).max(map.r().norm1());
        let inv = C64::new(1.0 / c0, 0.0);
        (c0.ln(), [t0.scale(inv), t1.scale(inv)], map.r().scale(inv))
    }

    fn eval_theta(&self, y: &[C64; 2]) -> [C64; 2] {
        [self.theta[0].eval(y[0], y[1]), self.theta[1].eval(y[0], y[1])]
    }

    fn eval_f(&self, x: &[C64; 3]) -> [C64; 3] {
        [self.theta[0].eval(x[0], x[1]), self.theta[1].eval(x[0], x[1]), self.r.eval(x[0], x[1], x[2])]
    }

    /// Defects from 10⁴ points of the unit sphere of `‖·‖∞`, inflated ×2.
    pub fn sphere_sample(map: &ValidatedMap) -> Self {
        let (log_scale, theta, r) = Self::scaled(map);
        let mut data = EscapeData {
            log_scale,
            theta,
            r,
            defect_f: EscapeDefect { m: 0.0, method: DefectMethod::SphereSample },
            defect_theta: EscapeDefect { m: 0.0, method: DefectMethod::SphereSample },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(SPHERE_SEED);
        let (mut mf, mut mt) = (0.0f64, 0.0f64);
        for i in 0..SPHERE_SAMPLES {
            let mut x = [unit_disk(&mut rng), unit_disk(&mut rng), unit_disk(&mut rng)];
            x[i % 3] = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
            mf = mf.max(norm_inf(&data.eval_f(&x)).ln().abs());
            let mut y = [x[0], x[1]];
            y[i % 2] = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
            mt = mt.max(norm_inf(&data.eval_theta(&y)).ln().abs());
        }
        data.defect_f.m = SPHERE_INFLATION * mf;
        data.defect_theta.m = SPHERE_INFLATION * mt;
        data
    }

    /// Guaranteed defects: the upper side is `log max_k ‖F_k‖₁ = 0` after
    /// normalisation; the lower side comes from a grid on each face
    /// `x_k = 1` of the sphere with a Lipschitz correction `d·δ`.
    pub fn coefficient_bound(map: &ValidatedMap, grid: usize) -> Result<Self> {
        let (log_scale, theta, r) = Self::scaled(map);
        let mut data = EscapeData {
            log_scale,
            theta,
            r,
            defect_f: EscapeDefect { m: 0.0, method: DefectMethod::CoefficientBound },
            defect_theta: EscapeDefect { m: 0.0, method: DefectMethod::CoefficientBound },
        };
        let h = 2.0 / grid as f64;
        let disk: Vec<C64> = (0..=grid)
            .flat_map(|i| (0..=grid).map(move |j| C64::new(-1.0 + i as f64 * h, -1.0 + j as f64 * h)))
            // keep grid points that cover the closed disk
            .filter(|z| z.norm() <= 1.0 + h)
            .map(|z| if z.norm() > 1.0 { z / z.norm() } else { z })
            .collect();
        let delta = h * std::f64::consts::FRAC_1_SQRT_2;
        let d = map.d() as f64;
        let one = C64::new(1.0, 0.0);
        let (mut min_f, mut min_t) = (f64::INFINITY, f64::INFINITY);
        for &u in &disk {
            min_t = min_t.min(norm_inf(&data.eval_theta(&[one, u])));
            min_t = min_t.min(norm_inf(&data.eval_theta(&[u, one])));
            for &v in &disk {
                for x in [[one, u, v], [u, one, v], [u, v, one]] {
                    min_f = min_f.min(norm_inf(&data.eval_f(&x)));
                }
            }
        }
        let lower_f = min_f - d * delta;
        let lower_t = min_t - d * delta;
        if lower_f <= 0.0 || lower_t <= 0.0 {
            return Err(Error::ToleranceUnreachable { tol: delta, cap: grid });
        }
        data.defect_f.m = -lower_f.ln();
        data.defect_theta.m = -lower_t.ln();
        Ok(data)
    }
}

impl ValidatedMap {
    /// Normalised lift and sphere-sampled escape defects, computed once.
    pub fn escape_data(&self) -> &EscapeData {
        self.escape.get_or_init(|| EscapeData::sphere_sample(self))
    }
}

fn tail(m: f64, d: f64, n: usize) -> f64 {
    m * d.powi(-(n as i32)) / (d - 1.0)
}

fn iterations_for(m: f64, d: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let mut n = 1;
    while tail(m, d, n) > tol {
        n += 1;
        if n > ITERATION_CAP {
            return Err(Error::ToleranceUnreachable { tol, cap: ITERATION_CAP });
        }
    }
    Ok(n)
}

fn escape_sum<const N: usize>(x: &[C64; N], n: usize, d: f64, step: impl Fn(&[C64; N]) -> [C64; N]) -> Result<f64> {
    let mut m = norm_inf(x);
    if m == 0.0 || !m.is_finite() {
        return Err(Error::InvalidArgument("Green function needs a nonzero finite lift".into()));
    }
    let mut acc = m.ln();
    let mut w = x.map(|c| c / m);
    let mut weight = 1.0;
    for _ in 0..n {
        let fx = step(&w);
        m = norm_inf(&fx);
        weight /= d;
        acc += weight * m.ln();
        w = fx.map(|c| c / m);
    }
    Ok(acc)
}

/// `G_Θ(y) = lim d⁻ⁿ log‖Θⁿ(y)‖∞` at a lift `y`.
pub fn green_theta(map: &ValidatedMap, y: &[C64; 2], tol: f64) -> Result<GreenValue> {
    let e = map.escape_data();
    let d = map.d() as f64;
    let n = iterations_for(e.defect_theta.m, d, tol)?;
    let v = escape_sum(y, n, d, |w| e.eval_theta(w))?;
    Ok(GreenValue {
        value: v + e.log_scale / (d - 1.0),
        truncation_bound: tail(e.defect_theta.m, d, n),
        iterations_used: n,
    })
}

/// `G_F(X) = lim d⁻ⁿ log‖Fⁿ(X)‖∞` at a lift `X`.
pub fn green_f(map: &ValidatedMap, x: &[C64; 3], tol: f64) -> Result<GreenValue> {
    let e = map.escape_data();
    let d = map.d() as f64;
    let n = iterations_for(e.defect_f.m, d, tol)?;
    let v = escape_sum(x, n, d, |w| e.eval_f(w))?;
    Ok(GreenValue {
        value: v + e.log_scale / (d - 1.0),
        truncation_bound: tail(e.defect_f.m, d, n),
        iterations_used: n,
    })
}

/// `G = G_F − G_Θ` on matched lifts; `Infinite` on `I(π)`.
pub fn relative_green(map: &ValidatedMap, x: &P2, tol: f64) -> Result<GreenValue> {
    if x.is_indeterminacy() {
        return Err(Error::Infinite);
    }
    let c = x.coords();
    let gf = green_f(map, c, tol)?;
    let gt = green_theta(map, &[c[0], c[1]], tol)?;
    Ok(GreenValue {
        value: gf.value - gt.value,
        truncation_bound: gf.truncation_bound + gt.truncation_bound,
        iterations_used: gf.iterations_used.max(gt.iterations_used),
    })
}

/// Lift `A` of `cycle[0]` with `Θⁿ(A) = A`, followed by its forward images.
pub fn periodic_lifts(map: &ValidatedMap, cycle: &[P1]) -> Result<Vec<[C64; 2]>> {
    let n = cycle.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty cycle".into()));
    }
    for i in 0..n {
        let img = map.apply_base(&cycle[i]);
        let dist = img.chordal(&cycle[(i + 1) % n]);
        if dist > 1e-9 {
            return Err(Error::InvalidArgument(format!("cycle point {i} maps {dist:e} away from its successor")));
        }
    }
    let s = *Fiber::new(cycle[0]).lift();
    // Θⁿ(s) = κ s, tracked as exp(L)·w to avoid overflow.
    let d = map.d() as f64;
    let mut log_c = C64::new(0.0, 0.0);
    let mut w = s;
    for _ in 0..n {
        let img = map.lift_base(&w);
        let k = if img[0].norm() >= img[1].norm() { 0 } else { 1 };
        let ck = img[k];
        log_c = log_c * d + ck.ln();
        w = img.map(|c| c / ck);
    }
    let k = if s[0].norm() >= s[1].norm() { 0 } else { 1 };
    let log_kappa = log_c + cdiv(w[k], s[k]).ln();
    let dn = d.powi(n as i32);
    let a0 = s.map(|c| c * (-log_kappa / (dn - 1.0)).exp());
    let mut lifts = vec![a0];
    for i in 1..n {
        let next = map.lift_base(&lifts[i - 1]);
        lifts.push(next);
    }
    Ok(lifts)
}

/// Green function of the fiber map `Rⁿ` over a base cycle, at the affine
/// fiber coordinate `z` over `cycle[0]`.
pub fn fiber_green(map: &ValidatedMap, cycle: &[P1], z: C64, tol: f64) -> Result<GreenValue> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Infinite);
    }
    let lifts = periodic_lifts(map, cycle)?;
    let n = lifts.len();
    let d = map.d() as f64;
    // z is the coordinate on the normalised fiber lift; rescale to A.
    let s = *Fiber::new(cycle[0]).lift();
    let k0 = if s[0].norm() >= s[1].norm() { 0 } else { 1 };
    let mut w = z * (lifts[0][k0] / s[k0]);
    let mut k = 0;
    while w.norm() <= 1e6 && k < 60 {
        let a = lifts[k % n];
        w = map.r().eval(a[0], a[1], w);
        k += 1;
    }
    let a = lifts[k % n];
    let scale = d.powi(k as i32);
    let g = green_f(map, &[a[0], a[1], w], tol * scale)?;
    Ok(GreenValue {
        value: g.value / scale,
        truncation_bound: g.truncation_bound / scale,
        iterations_used: k + g.iterations_used,
    })
}

/// Escape-time evaluation of `G` in the affine chart of a polynomial skew
/// product (`Θ₁ = c·y₁ᵈ`): while the base orbit stays in the disk where `p`
/// cannot escape, `G(t, z) = lim d⁻ᵏ log|zₖ|`. Points whose base orbit
/// leaves the disk fall back to [`relative_green`].
#[derive(Clone, Debug)]
pub struct AffineEscape {
    d: usize,
    p: Vec<C64>,
    q: Vec<Vec<C64>>,
    log_lead: f64,
    base_radius: f64,
    z_radius: f64,
    /// `|q(t,z)/(c z^d) − 1| ≤ spread/|z|` for `|t| ≤ base_radius`, `|z| ≥ 1`.
    spread: f64,
    max_iter: usize,
    tol: f64,
}

impl AffineEscape {
    /// `None` unless `map` is a polynomial skew product.
    pub fn new(map: &ValidatedMap, tol: f64) -> Option<Self> {
        if !(tol > 0.0) {
            return None;
        }
        let d = map.d();
        let [t0, t1] = map.theta();
        let zero = C64::new(0.0, 0.0);
        let c = t1.coeffs()[d];
        if c == zero || t1.coeffs()[..d].iter().any(|&x| x != zero) {
            return None;
        }
        // coeffs[j] multiplies a^(d−j) b^j; at (t, 1) the power of t is d−j.
        let p: Vec<C64> = (0..=d).map(|k| cdiv(t0.coeffs()[d - k], c)).collect();
        let q: Vec<Vec<C64>> = map
            .r()
            .z_coeffs()
            .iter()
            .enumerate()
            .map(|(l, f)| (0..=d - l).map(|k| cdiv(f.coeffs()[d - l - k], c)).collect())
            .collect();
        let pd = p[d].norm();
        let lead = q[d][0].norm();
        if pd == 0.0 || lead == 0.0 {
            return None;
        }
        let low: f64 = p[..d].iter().map(|x| x.norm()).sum::<f64>() / pd;
        let base_radius = 2.0 * 1f64.max(low).max((2.0 / pd).powf(1.0 / (d as f64 - 1.0)));
        let spread: f64 = q[..d]
            .iter()
            .map(|ql| ql.iter().enumerate().map(|(k, x)| x.norm() * base_radius.powi(k as i32)).sum::<f64>())
            .sum::<f64>()
            / lead;
        let z_radius = (2.0 * spread + 2.0).max(2.0 * spread / tol);
        let df = d as f64;
        let log_lead = lead.ln();
        let cap = z_radius.ln() + log_lead.abs() / (df - 1.0) + 1.0;
        let max_iter = ((cap / tol).ln() / df.ln()).ceil().max(1.0) as usize;
        Some(AffineEscape { d, p, q, log_lead, base_radius, z_radius, spread, max_iter, tol })
    }

    fn horner(c: &[C64], x: C64) -> C64 {
        c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &k| acc * x + k)
    }

    /// `G` at the point `(t, z)` of the affine chart.
    pub fn green(&self, map: &ValidatedMap, t: C64, z: C64) -> Result<GreenValue> {
        let df = self.d as f64;
        let (mut s, mut w) = (t, z);
        let mut scale = 1.0;
        let (z2, b2) = (self.z_radius * self.z_radius, self.base_radius * self.base_radius);
        for k in 0..=self.max_iter {
            let (wn2, sn2) = (w.norm_sqr(), s.norm_sqr());
            if !wn2.is_finite() || !sn2.is_finite() {
                break;
            }
            if wn2 >= z2 {
                let wn = wn2.sqrt();
                return Ok(GreenValue {
                    value: scale * (wn.ln() + self.log_lead / (df - 1.0)),
                    truncation_bound: scale * 2.0 * self.spread / wn,
                    iterations_used: k,
                });
            }
            if sn2 >= b2 {
                break;
            }
            if k == self.max_iter {
                let cap = self.z_radius.ln() + self.log_lead.abs() / (df - 1.0) + 1.0;
                return Ok(GreenValue { value: 0.0, truncation_bound: scale * cap, iterations_used: k });
            }
            w = self.q.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * w + Self::horner(c, s));
            s = Self::horner(&self.p, s);
            scale /= df;
        }
        relative_green(map, &P2::from_affine(t, z), self.tol)
    }

    /// `G` at any point; points off the affine chart use [`relative_green`].
    pub fn green_at(&self, map: &ValidatedMap, x: &P2) -> Result<GreenValue> {
        match x.affine() {
            Some((t, z)) => self.green(map, t, z),
            None => relative_green(map, x, self.tol),
        }
    }
}
