use std::fmt::Write as _;

use serde::Serialize;

use super::family::Rect;
use crate::algebra::C64;

/// Cell-centred grid of values over a parameter rectangle; `index = iy·nx + ix`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanGrid {
    pub nx: usize,
    pub ny: usize,
    pub rect: Rect,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    /// `true` where the cell failed.
    pub mask: Vec<bool>,
}

/// Affine map from grid values to 16-bit grey levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PgmMapping {
    pub low: f64,
    pub high: f64,
    pub levels: u32,
    pub masked_level: u32,
}

impl ScanGrid {
    pub fn new(nx: usize, ny: usize, rect: Rect) -> Self {
        let n = nx * ny;
        ScanGrid { nx, ny, rect, values: vec![f64::NAN; n], se: vec![f64::NAN; n], mask: vec![true; n] }
    }

    /// Grid of `f(λ)` at the cell centres with zero error.
    pub fn from_fn(nx: usize, ny: usize, rect: Rect, f: impl Fn(C64) -> f64) -> Self {
        let mut g = ScanGrid::new(nx, ny, rect);
        for i in 0..nx * ny {
            g.values[i] = f(g.param(i));
            g.se[i] = 0.0;
            g.mask[i] = !g.values[i].is_finite();
        }
        g
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> (f64, f64) {
        ((self.rect.re[1] - self.rect.re[0]) / self.nx as f64, (self.rect.im[1] - self.rect.im[0]) / self.ny as f64)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    /// Parameter at the centre of cell `i`.
    pub fn param(&self, i: usize) -> C64 {
        let (ix, iy) = self.coords(i);
        let (hx, hy) = self.spacing();
        C64::new(self.rect.re[0] + (ix as f64 + 0.5) * hx, self.rect.im[0] + (iy as f64 + 0.5) * hy)
    }

    /// Value at `(ix + dx, iy + dy)` if inside and unmasked.
    pub fn get(&self, ix: usize, iy: usize, dx: isize, dy: isize) -> Option<(f64, f64)> {
        let x = ix.checked_add_signed(dx).filter(|&x| x < self.nx)?;
        let y = iy.checked_add_signed(dy).filter(|&y| y < self.ny)?;
        let i = self.index(x, y);
        (!self.mask[i]).then(|| (self.values[i], self.se[i]))
    }

    pub fn unmasked(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    pub fn same_shape(&self, other: &ScanGrid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.rect == other.rect
    }

    /// Largest `|a − b|` over cells unmasked in both.
    pub fn sup_distance(&self, other: &ScanGrid) -> f64 {
        (0..self.len())
            .filter(|&i| !self.mask[i] && !other.mask[i])
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }

    /// `ix,iy,re,im,value,se,masked` rows with shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("ix,iy,re,im,value,se,masked\n");
        for i in 0..self.len() {
            let (ix, iy) = self.coords(i);
            let l = self.param(i);
            let _ = writeln!(s, "{ix},{iy},{},{},{},{},{}", l.re, l.im, self.values[i], self.se[i], self.mask[i] as u8);
        }
        s
    }

    /// Binary 16-bit PGM (top row = largest imaginary part). Values map
    /// affinely from `[low, high]` onto `1..=65535`; masked cells are 0.
    pub fn to_pgm(&self, range: Option<(f64, f64)>) -> (Vec<u8>, PgmMapping) {
        let (low, high) = range.unwrap_or_else(|| {
            (0..self.len()).filter(|&i| !self.mask[i]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                (lo.min(self.values[i]), hi.max(self.values[i]))
            })
        });
        let (low, high) = if low.is_finite() && high > low { (low, high) } else { (0.0, 1.0) };
        let mut out = format!("P5\n{} {}\n65535\n", self.nx, self.ny).into_bytes();
        for iy in (0..self.ny).rev() {
            for ix in 0..self.nx {
                let i = self.index(ix, iy);
                let level = if self.mask[i] {
                    0
                } else {
                    let u = ((self.values[i] - low) / (high - low)).clamp(0.0, 1.0);
                    1 + (u * 65534.0).round() as u16
                };
                out.extend_from_slice(&level.to_be_bytes());
            }
        }
        (out, PgmMapping { low, high, levels: 65535, masked_level: 0 })
    }
}
