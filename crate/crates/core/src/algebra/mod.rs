//! Complex polynomials: univariate, binary forms and ternary forms.

mod binary;
mod roots;
mod ternary;
mod uni;

pub use binary::BinaryForm;
pub use roots::{aberth_refine, cluster, Root, RootSet, RootValue, CLUSTER_RADIUS};
pub use ternary::{AffineQ, TernaryForm};
pub use uni::{PolyJson, UniPoly, DEFAULT_DEGREE_CAP};

pub type C64 = num_complex::Complex64;

/// `|z|`; plain square root in the safe range, `hypot` outside it.
#[inline]
pub fn cabs(z: C64) -> f64 {
    let m = z.re.abs().max(z.im.abs());
    if m > 1e-150 && m < 1e150 {
        (z.re * z.re + z.im * z.im).sqrt()
    } else if m == 0.0 {
        0.0
    } else {
        z.re.hypot(z.im)
    }
}

/// Principal square root without trigonometry.
pub fn csqrt(z: C64) -> C64 {
    if z.re == 0.0 && z.im == 0.0 {
        return z;
    }
    let w = ((cabs(z) + z.re.abs()) * 0.5).sqrt();
    if z.re >= 0.0 {
        C64::new(w, z.im / (2.0 * w))
    } else {
        C64::new(z.im.abs() / (2.0 * w), w.copysign(z.im))
    }
}

/// `1/z` without underflow in `|z|²`.
pub fn cinv(z: C64) -> C64 {
    let s = cabs(z);
    (z.conj() / s) / s
}

/// `a/b` without underflow in `|b|²`.
pub fn cdiv(a: C64, b: C64) -> C64 {
    let s = cabs(b);
    (a / s) * (b.conj() / s)
}

/// Coefficient 1-norm.
pub fn norm1(c: &[C64]) -> f64 {
    c.iter().map(|&x| cabs(x)).sum()
}

/// Determinant of a dense complex matrix by LU with partial pivoting.
pub fn det(mut m: Vec<Vec<C64>>) -> C64 {
    let n = m.len();
    let mut d = C64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm())).unwrap();
        if m[piv][col] == C64::new(0.0, 0.0) {
            return C64::new(0.0, 0.0);
        }
        if piv != col {
            m.swap(piv, col);
            d = -d;
        }
        let p = m[col][col];
        d *= p;
        for r in (col + 1)..n {
            let f = m[r][col] / p;
            if f != C64::new(0.0, 0.0) {
                for c in col..n {
                    let v = m[col][c];
                    m[r][c] -= f * v;
                }
            }
        }
    }
    d
}
