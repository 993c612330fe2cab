use serde::{Deserialize, Serialize};

use super::roots::{residual, solve_monic_chart, Root, RootSet, RootValue};
use super::uni::check_finite;
use super::{cabs, cdiv, cinv, det, norm1, PolyJson, UniPoly, C64};
use crate::error::{Error, Result};

/// Binary form of degree `d`; `coeffs[j]` multiplies `a^(d-j) b^j`.
///
/// The degree is carried explicitly, so leading zeros are meaningful
/// (they are roots at `(1:0)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct BinaryForm {
    coeffs: Vec<C64>,
}

impl TryFrom<PolyJson> for BinaryForm {
    type Error = String;

    fn try_from(value: PolyJson) -> std::result::Result<Self, Self::Error> {
        if value.coeffs.len() != value.degree + 1 {
            return Err(format!(
                "binary form of degree {} needs {} coefficients, got {}",
                value.degree,
                value.degree + 1,
                value.coeffs.len()
            ));
        }
        Ok(BinaryForm::new(value.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect()))
    }
}

impl From<BinaryForm> for PolyJson {
    fn from(f: BinaryForm) -> Self {
        PolyJson { degree: f.degree(), coeffs: f.coeffs.iter().map(|c| [c.re, c.im]).collect() }
    }
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl BinaryForm {
    /// Panics on an empty coefficient vector.
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "binary form needs at least one coefficient");
        BinaryForm { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero(d: usize) -> Self {
        Self::new(vec![zero(); d + 1])
    }

    /// `a^(d-j) b^j`.
    pub fn monomial(d: usize, j: usize) -> Self {
        let mut f = Self::zero(d);
        f.coeffs[j] = C64::new(1.0, 0.0);
        f
    }

    /// Homogenisation `b^d p(a/b)` of a polynomial of degree at most `d`.
    pub fn homogenize(p: &UniPoly, d: usize) -> Result<Self> {
        if p.degree() > d {
            return Err(Error::InvalidArgument(format!("cannot homogenise degree {} to {}", p.degree(), d)));
        }
        let mut f = Self::zero(d);
        for (k, &c) in p.coeffs().iter().enumerate() {
            f.coeffs[d - k] = c;
        }
        Ok(f)
    }

    /// Dehomogenisation `t ↦ F(t, 1)`.
    pub fn dehomogenize(&self) -> UniPoly {
        UniPoly::new(self.coeffs.iter().rev().copied().collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == zero())
    }

    pub fn norm1(&self) -> f64 {
        norm1(&self.coeffs)
    }

    pub fn eval(&self, a: C64, b: C64) -> C64 {
        let d = self.degree() as i32;
        if cabs(a) >= cabs(b) {
            if a == zero() {
                return if d == 0 { self.coeffs[0] } else { zero() };
            }
            let t = cdiv(b, a);
            let s = self.coeffs.iter().rev().fold(zero(), |acc, &c| acc * t + c);
            s * a.powi(d)
        } else {
            let u = cdiv(a, b);
            let s = self.coeffs.iter().fold(zero(), |acc, &c| acc * u + c);
            s * b.powi(d)
        }
    }

    /// `(F, ∂F/∂a, ∂F/∂b)`.
    pub fn eval_with_gradient(&self, a: C64, b: C64) -> (C64, C64, C64) {
        (self.eval(a, b), self.derivative(0).eval(a, b), self.derivative(1).eval(a, b))
    }

    /// Partial derivative in `a` (`var = 0`) or `b` (`var = 1`).
    pub fn derivative(&self, var: usize) -> BinaryForm {
        let d = self.degree();
        if d == 0 {
            return Self::zero(0);
        }
        let coeffs = match var {
            0 => (0..d).map(|j| self.coeffs[j] * (d - j) as f64).collect(),
            1 => (1..=d).map(|j| self.coeffs[j] * j as f64).collect(),
            _ => panic!("binary form has variables 0 and 1"),
        };
        Self::new(coeffs)
    }

    pub fn scale(&self, s: C64) -> BinaryForm {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &BinaryForm) -> Result<BinaryForm> {
        if self.degree() != other.degree() {
            return Err(Error::InvalidArgument(format!(
                "cannot add forms of degrees {} and {}",
                self.degree(),
                other.degree()
            )));
        }
        Ok(Self::new(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect()))
    }

    pub fn mul(&self, other: &BinaryForm) -> BinaryForm {
        let mut out = vec![zero(); self.degree() + other.degree() + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == zero() {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, k: usize) -> BinaryForm {
        let mut acc = Self::new(vec![C64::new(1.0, 0.0)]);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `F(G₀, G₁)` for two forms of a common degree `e`.
    pub fn compose(&self, g0: &BinaryForm, g1: &BinaryForm, cap: usize) -> Result<BinaryForm> {
        if g0.degree() != g1.degree() {
            return Err(Error::InvalidArgument("inner forms must share a degree".into()));
        }
        let d = self.degree();
        let e = g0.degree();
        if d * e > cap {
            return Err(Error::DegreeOverflow { degree: d * e, cap });
        }
        let mut p0 = vec![Self::new(vec![C64::new(1.0, 0.0)])];
        let mut p1 = vec![Self::new(vec![C64::new(1.0, 0.0)])];
        for k in 1..=d {
            p0.push(p0[k - 1].mul(g0));
            p1.push(p1[k - 1].mul(g1));
        }
        let mut out = Self::zero(d * e);
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c == zero() {
                continue;
            }
            let term = p0[d - j].mul(&p1[j]);
            for (k, &t) in term.coeffs.iter().enumerate() {
                out.coeffs[k] += c * t;
            }
        }
        Ok(out)
    }

    /// Sylvester resultant.
    pub fn resultant(&self, other: &BinaryForm) -> C64 {
        let m = self.degree();
        let n = other.degree();
        let size = m + n;
        if size == 0 {
            return C64::new(1.0, 0.0);
        }
        let mut mat = vec![vec![zero(); size]; size];
        for r in 0..n {
            for (j, &c) in self.coeffs.iter().enumerate() {
                mat[r][r + j] = c;
            }
        }
        for r in 0..m {
            for (j, &c) in other.coeffs.iter().enumerate() {
                mat[n + r][r + j] = c;
            }
        }
        det(mat)
    }

    /// Roots on P¹ with multiplicity; finite values are `t = a/b`.
    pub fn roots(&self, tol: f64) -> Result<RootSet> {
        let d = self.degree();
        if d == 0 {
            return Err(Error::DegenerateInput("root finding needs degree >= 1".into()));
        }
        check_finite(&self.coeffs)?;
        let k_inf = self.coeffs.iter().take_while(|&&c| c == zero()).count();
        let k_zero = self.coeffs.iter().rev().take_while(|&&c| c == zero()).count();
        let mid = &self.coeffs[k_inf..=d - k_zero];
        let mut out = Vec::new();
        if k_inf > 0 {
            out.push(Root { value: RootValue::Infinity, multiplicity: k_inf, residual: 0.0 });
        }
        if k_zero > 0 {
            out.push(Root { value: RootValue::Finite(zero()), multiplicity: k_zero, residual: 0.0 });
        }
        if mid.len() > 1 {
            // Roots of mid in t are the a/b ratios; pick the chart in which
            // their product has modulus at most one.
            let mut stack = [zero(); 8];
            let mut heap = Vec::new();
            let full_t: &mut [C64] = if d < 8 {
                &mut stack[..=d]
            } else {
                heap.resize(d + 1, zero());
                &mut heap
            };
            for (dst, src) in full_t.iter_mut().zip(self.coeffs.iter().rev()) {
                *dst = *src;
            }
            let full_t: &[C64] = full_t;
            let first = mid[0];
            let last = mid[mid.len() - 1];
            if cabs(last) <= cabs(first) {
                // mid reversed is a contiguous slice of full_t.
                let p = &full_t[k_zero..=d - k_inf];
                for r in solve_monic_chart(p, tol)?.roots {
                    let t = r.value.finite().expect("chart roots are finite");
                    out.push(Root {
                        value: RootValue::Finite(t),
                        multiplicity: r.multiplicity,
                        residual: residual(full_t, t),
                    });
                }
            } else {
                for r in solve_monic_chart(mid, tol)?.roots {
                    let u = r.value.finite().expect("chart roots are finite");
                    out.push(Root {
                        value: RootValue::Finite(cinv(u)),
                        multiplicity: r.multiplicity,
                        residual: residual(&self.coeffs, u),
                    });
                }
            }
        }
        let bad: Vec<f64> = out
            .iter()
            .filter(|r| {
                r.value.finite().is_some_and(|t| !t.re.is_finite() || !t.im.is_finite()) || !(r.residual <= tol)
            })
            .map(|r| r.residual)
            .collect();
        if !bad.is_empty() {
            return Err(Error::NonConvergence {
                unpolished: bad.len(),
                tol,
                worst: bad.iter().copied().fold(f64::NAN, f64::max),
            });
        }
        Ok(RootSet { roots: out })
    }
}
