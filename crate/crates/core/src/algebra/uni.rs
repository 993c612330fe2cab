use serde::{Deserialize, Serialize};

use super::roots::{solve_monic_chart, RootSet};
use super::{norm1, C64};
use crate::error::{Error, Result};

/// Default cap on the degree of a composition.
pub const DEFAULT_DEGREE_CAP: usize = 4096;

/// Complex univariate polynomial, `coeffs[k]` multiplies `z^k`.
///
/// Trailing (exactly) zero coefficients are trimmed on construction, so the
/// leading coefficient is nonzero unless the polynomial is identically zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct UniPoly {
    coeffs: Vec<C64>,
}

/// Wire format shared by univariate polynomials and binary forms.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub degree: usize,
    pub coeffs: Vec<[f64; 2]>,
}

impl TryFrom<PolyJson> for UniPoly {
    type Error = String;

    fn try_from(value: PolyJson) -> std::result::Result<Self, Self::Error> {
        if value.coeffs.len() != value.degree + 1 {
            return Err(format!(
                "polynomial of degree {} needs {} coefficients, got {}",
                value.degree,
                value.degree + 1,
                value.coeffs.len()
            ));
        }
        let p = UniPoly::new(value.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect());
        if !p.is_zero() && p.degree() != value.degree {
            return Err(format!(
                "declared degree {} but leading coefficient vanishes (actual degree {})",
                value.degree,
                p.degree()
            ));
        }
        Ok(p)
    }
}

impl From<UniPoly> for PolyJson {
    fn from(p: UniPoly) -> Self {
        PolyJson { degree: p.degree(), coeffs: p.coeffs.iter().map(|c| [c.re, c.im]).collect() }
    }
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == C64::new(0.0, 0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        UniPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self::new(vec![])
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[k] = C64::new(1.0, 0.0);
        UniPoly { coeffs }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        roots
            .iter()
            .fold(Self::constant(C64::new(1.0, 0.0)), |acc, &r| acc.mul(&Self::new(vec![-r, C64::new(1.0, 0.0)])))
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == C64::new(0.0, 0.0)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn norm1(&self) -> f64 {
        norm1(&self.coeffs)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner sweep.
    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() == 1 {
            return Self::zero();
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = C64::new(0.0, 0.0);
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).copied().unwrap_or(zero) + other.coeffs.get(k).copied().unwrap_or(zero))
                .collect(),
        )
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> UniPoly {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `self ∘ inner`, rejecting results whose degree would exceed `cap`.
    pub fn compose_capped(&self, inner: &UniPoly, cap: usize) -> Result<UniPoly> {
        let degree = self.degree() * inner.degree();
        if degree > cap {
            return Err(Error::DegreeOverflow { degree, cap });
        }
        let mut acc = Self::constant(self.leading());
        for &c in self.coeffs.iter().rev().skip(1) {
            acc = acc.mul(inner).add(&Self::constant(c));
        }
        Ok(acc)
    }

    pub fn compose(&self, inner: &UniPoly) -> Result<UniPoly> {
        self.compose_capped(inner, DEFAULT_DEGREE_CAP)
    }

    /// All roots with multiplicity; see [`RootSet`] for the residual convention.
    pub fn roots(&self, tol: f64) -> Result<RootSet> {
        if self.degree() == 0 {
            return Err(Error::DegenerateInput("root finding needs degree >= 1".into()));
        }
        check_finite(&self.coeffs)?;
        solve_monic_chart(&self.coeffs, tol)
    }
}

pub(crate) fn check_finite(coeffs: &[C64]) -> Result<()> {
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::DegenerateInput("non-finite coefficient".into()));
    }
    if norm1(coeffs) < f64::MIN_POSITIVE * 1e3 {
        return Err(Error::DegenerateInput("all coefficients below underflow threshold".into()));
    }
    Ok(())
}
