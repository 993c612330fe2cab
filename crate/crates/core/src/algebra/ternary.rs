use serde::{Deserialize, Serialize};

use super::{BinaryForm, UniPoly, C64};
use crate::error::{Error, Result};

/// Ternary form of degree `d` in `(y₀, y₁, z)`, stored by powers of `z`:
/// `R = Σ_l z^l · B_l(y₀, y₁)` with `deg B_l = d − l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TernaryJson", into = "TernaryJson")]
pub struct TernaryForm {
    z_coeffs: Vec<BinaryForm>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub exp: [usize; 3],
    pub c: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineTermJson {
    pub exp: [usize; 2],
    pub c: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TernaryJson {
    pub degree: usize,
    pub terms: Vec<TermJson>,
}

impl TryFrom<TernaryJson> for TernaryForm {
    type Error = String;

    fn try_from(v: TernaryJson) -> std::result::Result<Self, Self::Error> {
        let mut f = TernaryForm::zero(v.degree);
        for t in &v.terms {
            let [i, j, l] = t.exp;
            if i + j + l != v.degree {
                return Err(format!("exponent {:?} does not sum to degree {}", t.exp, v.degree));
            }
            f.add_term(i, j, l, C64::new(t.c[0], t.c[1]));
        }
        Ok(f)
    }
}

impl From<TernaryForm> for TernaryJson {
    fn from(f: TernaryForm) -> Self {
        let d = f.degree();
        let mut terms = Vec::new();
        for (l, b) in f.z_coeffs.iter().enumerate() {
            for (j, c) in b.coeffs().iter().enumerate() {
                if *c != C64::new(0.0, 0.0) {
                    terms.push(TermJson { exp: [d - l - j, j, l], c: [c.re, c.im] });
                }
            }
        }
        TernaryJson { degree: d, terms }
    }
}

impl TernaryForm {
    pub fn zero(d: usize) -> Self {
        TernaryForm { z_coeffs: (0..=d).map(|l| BinaryForm::zero(d - l)).collect() }
    }

    /// Build from the `z`-coefficient forms; `parts[l]` must have degree `d − l`.
    pub fn from_z_coeffs(parts: Vec<BinaryForm>) -> Result<Self> {
        let d = parts
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidArgument("ternary form needs at least one part".into()))?;
        for (l, b) in parts.iter().enumerate() {
            if b.degree() != d - l {
                return Err(Error::InvalidArgument(format!(
                    "z^{l} coefficient has degree {}, expected {}",
                    b.degree(),
                    d - l
                )));
            }
        }
        Ok(TernaryForm { z_coeffs: parts })
    }

    /// Add `c · y₀^i y₁^j z^l`.
    pub fn add_term(&mut self, i: usize, j: usize, l: usize, c: C64) {
        assert_eq!(i + j + l, self.degree(), "exponents must sum to the degree");
        let b = &self.z_coeffs[l];
        let mut cs = b.coeffs().to_vec();
        cs[j] += c;
        self.z_coeffs[l] = BinaryForm::new(cs);
    }

    pub fn coeff(&self, i: usize, j: usize, l: usize) -> C64 {
        assert_eq!(i + j + l, self.degree());
        self.z_coeffs[l].coeffs()[j]
    }

    pub fn degree(&self) -> usize {
        self.z_coeffs.len() - 1
    }

    pub fn z_coeffs(&self) -> &[BinaryForm] {
        &self.z_coeffs
    }

    /// Coefficient of `z^d`.
    pub fn leading_z(&self) -> C64 {
        self.z_coeffs[self.degree()].coeffs()[0]
    }

    pub fn norm1(&self) -> f64 {
        self.z_coeffs.iter().map(|b| b.norm1()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.z_coeffs.iter().all(|b| b.is_zero())
    }

    pub fn scale(&self, s: C64) -> TernaryForm {
        TernaryForm { z_coeffs: self.z_coeffs.iter().map(|b| b.scale(s)).collect() }
    }

    pub fn eval(&self, y0: C64, y1: C64, z: C64) -> C64 {
        let d = self.degree();
        let m = y0.norm().max(y1.norm()).max(z.norm());
        if m == 0.0 {
            return if d == 0 { self.z_coeffs[0].coeffs()[0] } else { C64::new(0.0, 0.0) };
        }
        // Evaluate at the max-norm-one representative, then rescale.
        let (a, b, w) = (y0 / m, y1 / m, z / m);
        let s = self.z_coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, bl| acc * w + bl.eval(a, b));
        s * m.powi(d as i32)
    }

    /// Formal partial derivative; `var` 0, 1, 2 is `y₀`, `y₁`, `z`.
    pub fn derivative(&self, var: usize) -> TernaryForm {
        let d = self.degree();
        if d == 0 {
            return TernaryForm::zero(0);
        }
        let parts = match var {
            0 | 1 => (0..d).map(|l| self.z_coeffs[l].derivative(var)).collect(),
            2 => (1..=d).map(|l| self.z_coeffs[l].scale(C64::new(l as f64, 0.0))).collect(),
            _ => panic!("ternary form has variables 0, 1, 2"),
        };
        TernaryForm { z_coeffs: parts }
    }

    /// Restriction `(a:b) ↦ R(a·s₀, a·s₁, b)` to the line over `s`.
    pub fn fiber_form(&self, s: [C64; 2]) -> BinaryForm {
        BinaryForm::new(self.z_coeffs.iter().map(|b| b.eval(s[0], s[1])).collect())
    }

    /// Homogenisation of `q(t, z) = Σ_l z^l q_l(t)` with `t = y₀/y₁`, `z = Z/y₁`.
    pub fn homogenize(q: &AffineQ, d: usize) -> Result<TernaryForm> {
        if q.parts.len() > d + 1 {
            return Err(Error::InvalidArgument(format!("q has z-degree {} above {}", q.parts.len() - 1, d)));
        }
        let mut parts = Vec::with_capacity(d + 1);
        for l in 0..=d {
            let ql = q.parts.get(l).cloned().unwrap_or_else(UniPoly::zero);
            parts.push(BinaryForm::homogenize(&ql, d - l)?);
        }
        Ok(TernaryForm { z_coeffs: parts })
    }
}

/// Affine fiber polynomial `q(t, z) = Σ_l z^l q_l(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineQJson", into = "AffineQJson")]
pub struct AffineQ {
    parts: Vec<UniPoly>,
}

/// Terms `c · t^k z^l` with `exp = [k, l]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineQJson {
    pub degree: usize,
    pub terms: Vec<AffineTermJson>,
}

impl TryFrom<AffineQJson> for AffineQ {
    type Error = String;

    fn try_from(v: AffineQJson) -> std::result::Result<Self, Self::Error> {
        let mut coeffs = vec![vec![C64::new(0.0, 0.0); v.degree + 1]; v.degree + 1];
        for t in &v.terms {
            let [k, l] = t.exp;
            if k + l > v.degree {
                return Err(format!("term t^{k} z^{l} exceeds degree {}", v.degree));
            }
            coeffs[l][k] += C64::new(t.c[0], t.c[1]);
        }
        let q = AffineQ::new(coeffs.into_iter().map(UniPoly::new).collect());
        if q.z_degree() != v.degree {
            return Err(format!("q must have z-degree {} (coefficient of z^{} is zero)", v.degree, v.degree));
        }
        Ok(q)
    }
}

impl From<AffineQ> for AffineQJson {
    fn from(q: AffineQ) -> Self {
        let mut terms = Vec::new();
        for (l, p) in q.parts.iter().enumerate() {
            for (k, c) in p.coeffs().iter().enumerate() {
                if *c != C64::new(0.0, 0.0) {
                    terms.push(AffineTermJson { exp: [k, l], c: [c.re, c.im] });
                }
            }
        }
        AffineQJson { degree: q.z_degree(), terms }
    }
}

impl AffineQ {
    /// `parts[l]` is the coefficient of `z^l`; trailing zero parts are trimmed.
    pub fn new(mut parts: Vec<UniPoly>) -> Self {
        while parts.len() > 1 && parts[parts.len() - 1].is_zero() {
            parts.pop();
        }
        if parts.is_empty() {
            parts.push(UniPoly::zero());
        }
        AffineQ { parts }
    }

    pub fn parts(&self) -> &[UniPoly] {
        &self.parts
    }

    pub fn z_degree(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn eval(&self, t: C64, z: C64) -> C64 {
        self.parts.iter().rev().fold(C64::new(0.0, 0.0), |acc, p| acc * z + p.eval(t))
    }

    /// `∂q/∂z`.
    pub fn dz(&self) -> AffineQ {
        if self.parts.len() == 1 {
            return AffineQ::new(vec![]);
        }
        AffineQ::new(self.parts.iter().enumerate().skip(1).map(|(l, p)| p.scale(C64::new(l as f64, 0.0))).collect())
    }

    /// Fiber polynomial `z ↦ q(t, z)`.
    pub fn fiber(&self, t: C64) -> UniPoly {
        UniPoly::new(self.parts.iter().map(|p| p.eval(t)).collect())
    }
}
