//! Simultaneous (Aberth–Ehrlich) root finding with Newton polishing and
//! cluster merging.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{cabs, cdiv, cinv, csqrt, norm1, C64};
use crate::error::{Error, Result};

const MAX_ITER: usize = 600;
const POLISH_STEPS: usize = 3;
/// Relative radius under which root approximations are merged into one root.
pub const CLUSTER_RADIUS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum RootValue {
    Finite(C64),
    /// The point `(1:0)` of a binary form.
    Infinity,
}

impl RootValue {
    /// Homogeneous coordinates `(t:1)` or `(1:0)`, max-modulus normalised.
    pub fn to_pair(self) -> [C64; 2] {
        match self {
            RootValue::Infinity => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            RootValue::Finite(t) if cabs(t) > 1.0 => [C64::new(1.0, 0.0), cinv(t)],
            RootValue::Finite(t) => [t, C64::new(1.0, 0.0)],
        }
    }

    pub fn finite(self) -> Option<C64> {
        match self {
            RootValue::Finite(t) => Some(t),
            RootValue::Infinity => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Root {
    pub value: RootValue,
    pub multiplicity: usize,
    /// `|p(r)| / (‖p‖₁ · max(1,|r|)^d)`.
    pub residual: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.roots.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Root hit by `u ∈ [0,1)` when roots are laid out by multiplicity.
    pub fn pick(&self, u: f64) -> &Root {
        let total = self.total_multiplicity();
        let mut k = ((u * total as f64) as usize).min(total - 1);
        for r in &self.roots {
            if k < r.multiplicity {
                return r;
            }
            k -= r.multiplicity;
        }
        unreachable!("multiplicities cover the range")
    }
}

/// Value and derivative of `p` divided by `max(1,|z|)^(n-1)`-ish scaling so
/// that large arguments do not overflow; only the ratio `p/p'` is used.
fn newton_ratio(c: &[C64], z: C64) -> C64 {
    let n = c.len() - 1;
    if z.norm_sqr() <= 1.0 {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &ck in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + ck;
        }
        p / dp
    } else {
        let w = z.inv();
        let mut q = C64::new(0.0, 0.0);
        let mut dq = C64::new(0.0, 0.0);
        for &ck in c.iter() {
            dq = dq * w + q;
            q = q * w + ck;
        }
        z * q / (q * n as f64 - w * dq)
    }
}

/// `|p(z)| / max(1,|z|)^n` together with the same quantity for `|p|` with
/// absolute-valued coefficients (the roundoff scale).
fn scaled_abs(c: &[C64], z: C64) -> (f64, f64) {
    if z.norm_sqr() <= 1.0 {
        let r = cabs(z);
        let mut p = C64::new(0.0, 0.0);
        let mut s = 0.0;
        for &ck in c.iter().rev() {
            p = p * z + ck;
            s = s * r + cabs(ck);
        }
        (cabs(p), s)
    } else {
        let w = z.inv();
        let r = cabs(w);
        let mut q = C64::new(0.0, 0.0);
        let mut s = 0.0;
        for &ck in c.iter() {
            q = q * w + ck;
            s = s * r + cabs(ck);
        }
        (cabs(q), s)
    }
}

fn quadratic(c: &[C64]) -> [C64; 2] {
    let (c0, b, a) = (c[0], c[1], c[2]);
    let sq = csqrt(b * b - a * c0 * 4.0);
    let s = if (b.conj() * sq).re >= 0.0 { sq } else { -sq };
    let q = -(b + s) * 0.5;
    if q == C64::new(0.0, 0.0) {
        // b = 0 and discriminant 0 force c0 = 0, excluded by the caller.
        [C64::new(0.0, 0.0); 2]
    } else {
        [cdiv(q, a), cdiv(c0, q)]
    }
}

/// Upper convex hull of `(i, log|c_i|)`; each segment `(i, j)` carries
/// `j − i` roots of modulus about `(|c_i|/|c_j|)^(1/(j−i))`.
fn newton_polygon(c: &[C64]) -> Vec<(usize, usize)> {
    let pts: Vec<(usize, f64)> =
        c.iter().enumerate().filter(|(_, v)| cabs(**v) > 0.0).map(|(i, v)| (i, cabs(*v).ln())).collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.windows(2).map(|w| (w[0].0, w[1].0)).collect()
}

fn aberth(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(0xAB3E_0000 ^ n as u64);
    let mut z = Vec::with_capacity(n);
    for (i, j) in newton_polygon(c) {
        let m = j - i;
        let radius = (cabs(c[i]).ln() - cabs(c[j]).ln()) / m as f64;
        let radius = radius.exp();
        let step = std::f64::consts::TAU / m as f64;
        let offset: f64 = rng.random::<f64>() * step;
        for k in 0..m {
            let jitter: f64 = (rng.random::<f64>() - 0.5) * 0.5 * step;
            z.push(C64::from_polar(radius, offset + k as f64 * step + jitter));
        }
    }
    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut all_done = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (pa, scale) = scaled_abs(c, z[k]);
            if pa <= 8.0 * f64::EPSILON * scale {
                done[k] = true;
                continue;
            }
            all_done = false;
            let ratio = newton_ratio(c, z[k]);
            if !ratio.re.is_finite() || !ratio.im.is_finite() {
                // Stationary point of p: nudge off it.
                let bump = C64::new(1e-8, 1e-8) * cabs(z[k]).max(1.0);
                z[k] += bump;
                continue;
            }
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff != C64::new(0.0, 0.0) {
                        s += cinv(diff);
                    }
                }
            }
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            if w.re.is_finite() && w.im.is_finite() {
                z[k] -= w;
                if cabs(w) <= 4.0 * f64::EPSILON * cabs(z[k]).max(1e-300) {
                    done[k] = true;
                }
            }
        }
        if all_done {
            break;
        }
    }
    z
}

/// Aberth iterations from given starting points for a function known only
/// through its Newton ratio `p/p'`. Stops when every relative step falls
/// below `step_tol` or after `max_iter` sweeps.
pub fn aberth_refine(mut z: Vec<C64>, ratio: impl Fn(C64) -> C64, step_tol: f64, max_iter: usize) -> Vec<C64> {
    let n = z.len();
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        let mut all_done = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let r = ratio(z[k]);
            if !r.re.is_finite() || !r.im.is_finite() {
                done[k] = true;
                continue;
            }
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                let diff = z[k] - z[j];
                if j != k && diff != C64::new(0.0, 0.0) {
                    s += cinv(diff);
                }
            }
            let w = r / (C64::new(1.0, 0.0) - r * s);
            if !w.re.is_finite() || !w.im.is_finite() {
                done[k] = true;
                continue;
            }
            z[k] -= w;
            if cabs(w) <= step_tol * cabs(z[k]).max(1.0) {
                done[k] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    z
}

fn polish(c: &[C64], z: &mut [C64]) {
    for zk in z.iter_mut() {
        let (mut best, scale) = scaled_abs(c, *zk);
        for _ in 0..POLISH_STEPS {
            if best <= 2.0 * f64::EPSILON * scale {
                break;
            }
            let ratio = newton_ratio(c, *zk);
            if !ratio.re.is_finite() || !ratio.im.is_finite() {
                break;
            }
            let cand = *zk - ratio;
            let val = scaled_abs(c, cand).0;
            if val < best {
                best = val;
                *zk = cand;
            } else {
                break;
            }
        }
    }
}

/// Group approximations closer than `CLUSTER_RADIUS·max(1,|z|)`.
pub fn cluster(z: &[C64]) -> Vec<(C64, usize)> {
    cluster_with_floor(z, 1.0)
}

/// Smallest root modulus suggested by the Newton polygon, capped at 1.
fn root_scale(c: &[C64]) -> f64 {
    newton_polygon(c)
        .into_iter()
        .map(|(i, j)| ((cabs(c[i]).ln() - cabs(c[j]).ln()) / (j - i) as f64).exp())
        .fold(1.0, f64::min)
}

/// [`root_scale`] for degree 1 or 2 without allocation.
fn small_root_scale(c: &[C64]) -> f64 {
    let a: Vec3 = [cabs(c[0]), cabs(c[1]), c.get(2).map_or(0.0, |&x| cabs(x))];
    let r = if c.len() == 2 {
        a[0] / a[1]
    } else if a[1] * a[1] >= a[0] * a[2] {
        (a[0] / a[1]).min(a[1] / a[2])
    } else {
        (a[0] / a[2]).sqrt()
    };
    r.min(1.0)
}

type Vec3 = [f64; 3];

/// As [`cluster`], with radius `CLUSTER_RADIUS·max(floor, |z|)`.
fn cluster_with_floor(z: &[C64], floor: f64) -> Vec<(C64, usize)> {
    let n = z.len();
    match z {
        [a] => return vec![(*a, 1)],
        [a, b] => {
            let radius = CLUSTER_RADIUS * cabs(*a).max(cabs(*b)).max(floor);
            return if cabs(*a - *b) <= radius { vec![((*a + *b) * 0.5, 2)] } else { vec![(*a, 1), (*b, 1)] };
        }
        _ => {}
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let radius = CLUSTER_RADIUS * cabs(z[i]).max(cabs(z[j])).max(floor);
            if (z[i] - z[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += z[i];
                g.2 += 1;
            }
            None => groups.push((r, z[i], 1)),
        }
    }
    groups.into_iter().map(|(_, sum, m)| (sum / m as f64, m)).collect()
}

/// Residual of `r` for the polynomial with coefficients `c` (low to high).
pub(crate) fn residual(c: &[C64], r: C64) -> f64 {
    let n1 = norm1(c);
    if n1 == 0.0 {
        return 0.0;
    }
    scaled_abs(c, r).0 / n1
}

/// Roots of `Σ c_k z^k` with `c_n ≠ 0`, `n ≥ 1`.
pub(crate) fn solve_monic_chart(c: &[C64], tol: f64) -> Result<RootSet> {
    let n = c.len() - 1;
    let zero = C64::new(0.0, 0.0);
    let k0 = c.iter().take_while(|&&ck| ck == zero).count();
    let mut out = Vec::new();
    if k0 > 0 {
        out.push(Root { value: RootValue::Finite(zero), multiplicity: k0, residual: 0.0 });
    }
    let reduced = &c[k0..];
    let m = n - k0;
    if m > 0 {
        // Work with a scaled copy; roots are scale invariant.
        let s = norm1(reduced);
        let groups = if m <= 2 {
            let mut rc = [C64::new(0.0, 0.0); 3];
            for (r, &x) in rc.iter_mut().zip(reduced) {
                *r = x / s;
            }
            let rc = &rc[..=m];
            let mut z = if m == 1 { [cdiv(-rc[0], rc[1]), C64::new(0.0, 0.0)] } else { quadratic(rc) };
            polish(rc, &mut z[..m]);
            cluster_with_floor(&z[..m], small_root_scale(rc))
        } else {
            let rc: Vec<C64> = reduced.iter().map(|&x| x / s).collect();
            let mut z = aberth(&rc);
            polish(&rc, &mut z);
            cluster_with_floor(&z, root_scale(&rc))
        };
        for (value, multiplicity) in groups {
            out.push(Root { value: RootValue::Finite(value), multiplicity, residual: residual(c, value) });
        }
    }
    let bad: Vec<f64> = out.iter().map(|r| r.residual).filter(|&r| !(r <= tol)).collect();
    if !bad.is_empty() {
        return Err(Error::NonConvergence {
            unpolished: bad.len(),
            tol,
            worst: bad.iter().copied().fold(0.0, f64::max),
        });
    }
    Ok(RootSet { roots: out })
}
