use serde::{Deserialize, Serialize};

use crate::algebra::{BinaryForm, TernaryForm, UniPoly, C64};
use crate::error::{Error, Result};
use crate::geometry::{FiberedMap, ValidatedMap};

pub const BUILTIN_FAMILIES: &[&str] = &["mandel_family", "coupled_family"];

/// Axis-aligned rectangle in the parameter plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl Rect {
    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re[0] + self.re[1]), 0.5 * (self.im[0] + self.im[1]))
    }

    /// Corners, edge midpoints and centre.
    pub fn probe_points(&self) -> [C64; 9] {
        let xs = [self.re[0], 0.5 * (self.re[0] + self.re[1]), self.re[1]];
        let ys = [self.im[0], 0.5 * (self.im[0] + self.im[1]), self.im[1]];
        std::array::from_fn(|k| C64::new(xs[k % 3], ys[k / 3]))
    }

    /// Same centre, sides scaled by `s`.
    pub fn scaled(&self, s: f64) -> Rect {
        let c = self.center();
        let (hx, hy) = (0.5 * s * (self.re[1] - self.re[0]), 0.5 * s * (self.im[1] - self.im[0]));
        Rect { re: [c.re - hx, c.re + hx], im: [c.im - hy, c.im + hy] }
    }

    pub fn is_valid(&self) -> bool {
        self.re.iter().chain(&self.im).all(|v| v.is_finite()) && self.re[0] < self.re[1] && self.im[0] < self.im[1]
    }
}

/// Coefficient `c(λ)` of the monomial `y₀ⁱ y₁ʲ zˡ` of `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyTerm {
    pub exp: [usize; 3],
    pub c: UniPoly,
}

/// One-parameter family of fibered maps; every coefficient is a polynomial
/// in `λ`. `theta0[j]`, `theta1[j]` multiply `y₀^(d−j) y₁^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFamily {
    pub name: String,
    pub d: usize,
    pub theta0: Vec<UniPoly>,
    pub theta1: Vec<UniPoly>,
    pub r: Vec<FamilyTerm>,
    pub domain: Rect,
}

fn real(c: &[f64]) -> UniPoly {
    UniPoly::from_real(c)
}

impl ParamFamily {
    /// Skew-product family `(p(t), Σ c_{kl}(λ) tᵏ zˡ)` with fixed real `p`.
    pub fn skew(name: &str, p: &[f64], q: Vec<([usize; 2], UniPoly)>, domain: Rect) -> Result<Self> {
        let d = p.len() - 1;
        let mut theta0 = vec![UniPoly::zero(); d + 1];
        for (k, &v) in p.iter().enumerate() {
            theta0[d - k] = real(&[v]);
        }
        let mut theta1 = vec![UniPoly::zero(); d + 1];
        theta1[d] = real(&[1.0]);
        let mut r = Vec::new();
        for ([k, l], c) in q {
            if k + l > d {
                return Err(Error::InvalidArgument(format!("term t^{k} z^{l} exceeds degree {d}")));
            }
            r.push(FamilyTerm { exp: [k, d - k - l, l], c });
        }
        let f = ParamFamily { name: name.into(), d, theta0, theta1, r, domain };
        f.check()?;
        Ok(f)
    }

    fn check(&self) -> Result<()> {
        let d = self.d;
        if d < 2 || self.theta0.len() != d + 1 || self.theta1.len() != d + 1 {
            return Err(Error::Config(format!(
                "family {:?}: theta0/theta1 need d + 1 = {} coefficients",
                self.name,
                d + 1
            )));
        }
        if let Some(t) = self.r.iter().find(|t| t.exp.iter().sum::<usize>() != d) {
            return Err(Error::Config(format!("family {:?}: term {:?} does not have degree {d}", self.name, t.exp)));
        }
        if !self.domain.is_valid() {
            return Err(Error::Config(format!("family {:?}: empty or non-finite domain", self.name)));
        }
        Ok(())
    }

    /// `θ` does not depend on `λ`.
    pub fn base_is_fixed(&self) -> bool {
        self.theta0.iter().chain(&self.theta1).all(|c| c.degree() == 0)
    }

    /// The unvalidated map at `λ`.
    pub fn map_at(&self, lambda: C64) -> Result<FiberedMap> {
        self.check()?;
        let form = |cs: &[UniPoly]| BinaryForm::new(cs.iter().map(|c| c.eval(lambda)).collect());
        let mut r = TernaryForm::zero(self.d);
        for t in &self.r {
            r.add_term(t.exp[0], t.exp[1], t.exp[2], t.c.eval(lambda));
        }
        FiberedMap::new(form(&self.theta0), form(&self.theta1), r)
    }

    pub fn at(&self, lambda: C64) -> Result<ValidatedMap> {
        self.map_at(lambda)?.validated()
    }

    /// Validate on the 9 probe points; on failure halve the domain about its
    /// centre (up to three times) before rejecting the family.
    pub fn probed(&self) -> Result<ParamFamily> {
        let mut f = self.clone();
        for attempt in 0..4 {
            let bad: Vec<C64> = f.domain.probe_points().into_iter().filter(|&l| f.at(l).is_err()).collect();
            if bad.is_empty() {
                if attempt > 0 {
                    log::warn!("family {:?}: domain shrunk to {:?}", f.name, f.domain);
                }
                return Ok(f);
            }
            log::warn!("family {:?}: validation fails at {:?}", f.name, bad);
            f.domain = f.domain.scaled(0.5);
        }
        Err(Error::Config(format!("family {:?} fails validation on every probed domain", self.name)))
    }
}

pub fn builtin_family(name: &str) -> Result<ParamFamily> {
    let lambda = UniPoly::from_real(&[0.0, 1.0]);
    let one = UniPoly::from_real(&[1.0]);
    match name {
        "mandel_family" => ParamFamily::skew(
            name,
            &[0.0, 0.0, 1.0],
            vec![([0, 2], one), ([0, 0], lambda)],
            Rect { re: [-2.5, 1.5], im: [-1.5, 1.5] },
        ),
        "coupled_family" => ParamFamily::skew(
            name,
            &[-1.0, 0.0, 1.0],
            vec![([0, 2], one), ([1, 0], lambda)],
            Rect { re: [-2.0, 2.0], im: [-2.0, 2.0] },
        ),
        _ => Err(Error::Config(format!("unknown built-in family {name:?} (known: {})", BUILTIN_FAMILIES.join(", ")))),
    }
}
