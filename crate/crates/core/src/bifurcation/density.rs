use serde::{Deserialize, Serialize};

use super::grid::ScanGrid;
use crate::algebra::C64;
use crate::error::{Error, Result};

/// Noise band multiplier: `ε_noise = NOISE_FACTOR · max SE / h²`.
pub const NOISE_FACTOR: f64 = 6.0;

/// `∂∂̄`-density of a scanned potential: `values` is the 5-point Laplacian
/// over 4, `se` the per-cell noise band `ε_noise`.
#[derive(Clone, Debug, Serialize)]
pub struct Density {
    pub grid: ScanGrid,
    /// Cells with density below `−ε_noise`.
    pub flagged: Vec<bool>,
}

impl Density {
    pub fn defined(&self) -> usize {
        self.grid.unmasked()
    }

    pub fn violations(&self) -> usize {
        self.flagged.iter().filter(|f| **f).count()
    }

    pub fn violation_fraction(&self) -> f64 {
        self.violations() as f64 / self.defined().max(1) as f64
    }

    /// `Σ max(density, 0) · cell area` over the cells where `keep` holds.
    pub fn positive_mass(&self, keep: impl Fn(usize) -> bool) -> f64 {
        let (hx, hy) = self.grid.spacing();
        (0..self.grid.len())
            .filter(|&i| !self.grid.mask[i] && keep(i))
            .map(|i| self.grid.values[i].max(0.0) * hx * hy)
            .sum()
    }
}

fn stencil(g: &ScanGrid, ix: usize, iy: usize, k: isize) -> Option<(f64, f64)> {
    let (hx, hy) = g.spacing();
    let (hx, hy) = (hx * k as f64, hy * k as f64);
    let (c, sc) = g.get(ix, iy, 0, 0)?;
    let mut se = sc;
    let mut nb = [0.0; 4];
    for (slot, (dx, dy)) in nb.iter_mut().zip([(k, 0), (-k, 0), (0, k), (0, -k)]) {
        let (v, s) = g.get(ix, iy, dx, dy)?;
        *slot = v;
        se = se.max(s);
    }
    let lap = (nb[0] + nb[1] - 2.0 * c) / (hx * hx) + (nb[2] + nb[3] - 2.0 * c) / (hy * hy);
    Some((lap / 4.0, se))
}

/// `|L_h − L_2h|` at the cell, or at the nearest cell whose doubled stencil
/// fits inside the grid.
fn richardson(g: &ScanGrid, ix: usize, iy: usize) -> Option<f64> {
    if g.nx < 5 || g.ny < 5 {
        return None;
    }
    let (x, y) = (ix.clamp(2, g.nx - 3), iy.clamp(2, g.ny - 3));
    let (l, _) = stencil(g, x, y, 1)?;
    let (l2, _) = stencil(g, x, y, 2)?;
    Some((l - l2).abs())
}

/// 5-point Laplacian density `Δu/4`. A cell is defined when its stencil is
/// unmasked. The band is `6·(stencil max SE)/h²`, floored by the
/// discretisation estimate `|L_h − L_2h|` (taken from the nearest interior
/// cell near the edges).
pub fn laplacian_density(grid: &ScanGrid) -> Density {
    let (hx, hy) = grid.spacing();
    let h2 = hx.min(hy).powi(2);
    let mut out = ScanGrid::new(grid.nx, grid.ny, grid.rect);
    let mut flagged = vec![false; grid.len()];
    for i in 0..grid.len() {
        let (ix, iy) = grid.coords(i);
        let Some((lap, se)) = stencil(grid, ix, iy, 1) else {
            continue;
        };
        let richardson = richardson(grid, ix, iy).unwrap_or(0.0);
        let band = (NOISE_FACTOR * se / h2).max(richardson);
        out.values[i] = lap;
        out.se[i] = band;
        out.mask[i] = false;
        flagged[i] = lap < -band;
    }
    Density { grid: out, flagged }
}

/// Gaussian blur with standard deviation `sigma` cells, truncated at
/// `3σ`, renormalised over unmasked neighbours. SEs are blurred with the
/// same weights (no independence assumed). Masked cells stay masked.
pub fn gaussian_blur(grid: &ScanGrid, sigma: f64) -> ScanGrid {
    if !(sigma > 0.0) {
        return grid.clone();
    }
    let r = (3.0 * sigma).ceil() as isize;
    let mut out = grid.clone();
    for i in 0..grid.len() {
        if grid.mask[i] {
            continue;
        }
        let (ix, iy) = grid.coords(i);
        let (mut w, mut v, mut s) = (0.0, 0.0, 0.0);
        for dy in -r..=r {
            for dx in -r..=r {
                if let Some((val, se)) = grid.get(ix, iy, dx, dy) {
                    let k = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
                    w += k;
                    v += k * val;
                    s += k * se;
                }
            }
        }
        out.values[i] = v / w;
        out.se[i] = s / w;
    }
    out
}

/// Ring weights `(axis-x, axis-y, diagonal)` per neighbour, chosen so the
/// weighted mean minus the centre is proportional to `Δu` to leading order.
fn ring_weights(hx: f64, hy: f64) -> (f64, f64, f64) {
    let (x2, y2) = (hx * hx, hy * hy);
    let a = (2.0 * y2 - x2) / (4.0 * (x2 + y2));
    let b = 0.25 - a;
    if a >= 0.0 && b >= 0.0 {
        (a, b, 0.125)
    } else {
        (y2 / (2.0 * (x2 + y2)), x2 / (2.0 * (x2 + y2)), 0.0)
    }
}

/// Fraction of cells (with a full ring) satisfying the sub-mean-value
/// inequality `u ≤ ring mean + 3·SE + (3/2)h²·band`, where the ring is the
/// 8 neighbours (weighted for anisotropic cells) and `band` is the
/// Laplacian band of the cell.
pub fn sub_mean_value_fraction(grid: &ScanGrid, density: &Density) -> f64 {
    let (hx, hy) = grid.spacing();
    let h2 = hx.min(hy).powi(2);
    let (wx, wy, wd) = ring_weights(hx, hy);
    let (mut ok, mut total) = (0usize, 0usize);
    for i in 0..grid.len() {
        let (ix, iy) = grid.coords(i);
        let Some((c, sc)) = grid.get(ix, iy, 0, 0) else { continue };
        let ring: Option<Vec<(f64, f64, f64)>> = (-1..=1)
            .flat_map(|dy| (-1..=1).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx != 0 || dy != 0)
            .map(|(dx, dy)| {
                let w = match (dx, dy) {
                    (_, 0) => wx,
                    (0, _) => wy,
                    _ => wd,
                };
                grid.get(ix, iy, dx, dy).map(|(v, s)| (w, v, s))
            })
            .collect();
        let Some(ring) = ring else { continue };
        let mean: f64 = ring.iter().map(|r| r.0 * r.1).sum();
        let var_mean: f64 = ring.iter().map(|r| (r.0 * r.2).powi(2)).sum();
        let band = if density.grid.mask[i] { 0.0 } else { density.grid.se[i] };
        total += 1;
        if c <= mean + 3.0 * (sc * sc + var_mean).sqrt() + 1.5 * h2 * band {
            ok += 1;
        }
    }
    ok as f64 / total.max(1) as f64
}

/// Smooth bump `exp(1 − 1/(1 − |λ − c|²/r²))` supported in the disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Bump {
    pub fn eval(&self, l: C64) -> f64 {
        let s = (l - C64::new(self.center[0], self.center[1])).norm_sqr() / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }
}

/// `Σ density·φ·cell area` over defined cells.
pub fn bump_pairing(density: &Density, bump: &Bump) -> f64 {
    let g = &density.grid;
    let (hx, hy) = g.spacing();
    (0..g.len()).filter(|&i| !g.mask[i]).map(|i| g.values[i] * bump.eval(g.param(i)) * hx * hy).sum()
}

/// `Σ|c_j|·se_j` where `pairing = Σ c_j u_j` is the bump pairing written as
/// a linear functional of the grid values; bounds the pairing error without
/// any independence assumption.
pub fn bump_pairing_bound(grid: &ScanGrid, bump: &Bump) -> f64 {
    let density = laplacian_density(grid);
    let (hx, hy) = grid.spacing();
    let mut coef = vec![0.0; grid.len()];
    for i in (0..grid.len()).filter(|&i| !density.grid.mask[i]) {
        let w = bump.eval(grid.param(i)) * hx * hy / 4.0;
        if w == 0.0 {
            continue;
        }
        let (ix, iy) = grid.coords(i);
        coef[grid.index(ix + 1, iy)] += w / (hx * hx);
        coef[grid.index(ix - 1, iy)] += w / (hx * hx);
        coef[grid.index(ix, iy + 1)] += w / (hy * hy);
        coef[grid.index(ix, iy - 1)] += w / (hy * hy);
        coef[i] -= 2.0 * w * (1.0 / (hx * hx) + 1.0 / (hy * hy));
    }
    coef.iter().zip(&grid.se).filter(|(c, _)| **c != 0.0).map(|(c, s)| c.abs() * s).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub n: Option<usize>,
    pub pairing: f64,
    /// [`bump_pairing_bound`] of this row.
    pub bound: f64,
    /// `pairing − reference pairing`.
    pub gap: f64,
    pub relative_gap: f64,
    /// `|gap|` did not grow from the previous row.
    pub monotone: bool,
}

/// Bump pairings of the periodic densities `(n, grid)` against the
/// reference (direct-scan) density.
pub fn bif_compare(reference: &ScanGrid, periodic: &[(usize, ScanGrid)], bump: &Bump) -> Result<Vec<CompareRow>> {
    if let Some((n, _)) = periodic.iter().find(|(_, g)| !g.same_shape(reference)) {
        return Err(Error::InvalidArgument(format!("grid for n = {n} does not match the reference grid")));
    }
    let reference_pairing = bump_pairing(&laplacian_density(reference), bump);
    let mut rows = vec![CompareRow {
        label: "direct".into(),
        n: None,
        pairing: reference_pairing,
        bound: bump_pairing_bound(reference, bump),
        gap: 0.0,
        relative_gap: 0.0,
        monotone: true,
    }];
    let mut last_gap = f64::INFINITY;
    for (n, g) in periodic {
        let pairing = bump_pairing(&laplacian_density(g), bump);
        let gap = pairing - reference_pairing;
        rows.push(CompareRow {
            label: format!("n={n}"),
            n: Some(*n),
            pairing,
            bound: bump_pairing_bound(g, bump),
            gap,
            relative_gap: gap / reference_pairing.abs(),
            monotone: gap.abs() <= last_gap,
        });
        last_gap = gap.abs();
    }
    Ok(rows)
}
