#![allow(dead_code)]

use fibered_dyn::algebra::C64;
use fibered_dyn::geometry::{P1, P2};
use rand::Rng;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn disk<R: Rng>(rng: &mut R, radius: f64) -> C64 {
    C64::from_polar(radius * rng.random::<f64>().sqrt(), rng.random::<f64>() * std::f64::consts::TAU)
}

/// Random point of P² with a nondegenerate base.
pub fn random_p2<R: Rng>(rng: &mut R) -> P2 {
    P2::new([disk(rng, 2.0), disk(rng, 2.0), disk(rng, 2.0)]).unwrap()
}

pub fn random_p1<R: Rng>(rng: &mut R) -> P1 {
    P1::new([disk(rng, 2.0), disk(rng, 2.0)]).unwrap()
}

/// Escape-rate Green function of a monic-ish polynomial in one variable,
/// straight from the definition `lim 2⁻ⁿ log|qⁿ(z)|`.
pub fn green_1d(q: impl Fn(C64) -> C64, d: f64, z: C64) -> f64 {
    let mut w = z;
    let mut k = 0;
    while w.norm() < 1e150 && k < 2000 {
        w = q(w);
        k += 1;
    }
    if w.norm() < 1e150 {
        return 0.0;
    }
    w.norm().ln() / d.powi(k)
}

/// Escape-time classifier for `z² + λ`: `true` when the orbit of 0 leaves
/// `|z| ≤ 2` within 2000 steps.
pub fn mandel_escapes(l: C64) -> bool {
    let mut z = C64::new(0.0, 0.0);
    for _ in 0..2000 {
        z = z * z + l;
        if z.norm_sqr() > 4.0 {
            return true;
        }
    }
    false
}

/// Exterior distance estimate `2|z| log|z| / |dz/dλ|` for `z² + λ`; 0 when
/// the orbit stays bounded.
pub fn mandel_distance(l: C64) -> f64 {
    let (mut z, mut dz) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for _ in 0..2000 {
        dz = z * dz * 2.0 + 1.0;
        z = z * z + l;
        if z.norm_sqr() > 1e20 {
            let r = z.norm();
            return 2.0 * r * r.ln() / dz.norm();
        }
    }
    0.0
}

/// Cells of an `nx × ny` cell-centred grid within `reach` cells (Chebyshev
/// distance) of a boundary cell. A cell is on the boundary when it is
/// bounded with an escaping neighbour, or escaping with distance estimate
/// below the cell size.
pub fn mandel_boundary_band(params: &[C64], nx: usize, ny: usize, cell: f64, reach: isize) -> Vec<bool> {
    let esc: Vec<bool> = params.iter().map(|&l| mandel_escapes(l)).collect();
    let at = |x: isize, y: isize| -> Option<usize> {
        (x >= 0 && y >= 0 && (x as usize) < nx && (y as usize) < ny).then(|| y as usize * nx + x as usize)
    };
    let boundary: Vec<bool> = (0..params.len())
        .map(|i| {
            if esc[i] {
                return mandel_distance(params[i]) < cell;
            }
            let (x, y) = ((i % nx) as isize, (i / nx) as isize);
            (-1..=1).any(|dy| (-1..=1).any(|dx| at(x + dx, y + dy).is_some_and(|j| esc[j])))
        })
        .collect();
    (0..params.len())
        .map(|i| {
            let (x, y) = ((i % nx) as isize, (i / nx) as isize);
            (-reach..=reach).any(|dy| (-reach..=reach).any(|dx| at(x + dx, y + dy).is_some_and(|j| boundary[j])))
        })
        .collect()
}
