use std::fmt;
use std::ops::Deref;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fiber::{Fiber, FiberMap};
use super::projective::{argmax, norm2, P1, P2};
use crate::algebra::{cabs, cdiv, AffineQ, BinaryForm, RootSet, TernaryForm, UniPoly, C64};
use crate::error::{Error, Result};

/// Residual tolerance for the small root solves behind preimages.
pub const PREIMAGE_TOL: f64 = 1e-9;
/// Relative threshold used by [`FiberedMap::validate`].
pub const VALIDATION_TOL: f64 = 1e-12;

/// Affine skew-product view `(t, z) ↦ (p(t), q(t, z))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub p: UniPoly,
    pub q: AffineQ,
}

/// Homogeneous lift `F = (Θ₀, Θ₁, R)` of an endomorphism of P² preserving
/// `[y₀:y₁:z] ↦ [y₀:y₁]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapJson", into = "MapJson")]
pub struct FiberedMap {
    d: usize,
    theta0: BinaryForm,
    theta1: BinaryForm,
    r: TernaryForm,
    affine: Option<Affine>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapJson {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<BinaryForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<BinaryForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<TernaryForm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine: Option<Affine>,
}

impl TryFrom<MapJson> for FiberedMap {
    type Error = String;

    fn try_from(v: MapJson) -> std::result::Result<Self, Self::Error> {
        let map = match (v.theta0, v.theta1, v.r, v.affine) {
            (Some(t0), Some(t1), Some(r), affine) => {
                let map = FiberedMap::new(t0, t1, r).map_err(|e| e.to_string())?;
                if let Some(a) = affine {
                    let h = FiberedMap::from_skew(a.p, a.q).map_err(|e| e.to_string())?;
                    if h.theta0 != map.theta0 || h.theta1 != map.theta1 || h.r != map.r {
                        return Err("affine view does not homogenise to (theta0, theta1, r)".into());
                    }
                    h
                } else {
                    map
                }
            }
            (None, None, None, Some(a)) => FiberedMap::from_skew(a.p, a.q).map_err(|e| e.to_string())?,
            _ => return Err("give either all of theta0, theta1, r or an affine view".into()),
        };
        if map.d != v.d {
            return Err(format!("declared d = {} but forms have degree {}", v.d, map.d));
        }
        Ok(map)
    }
}

impl From<FiberedMap> for MapJson {
    fn from(m: FiberedMap) -> Self {
        MapJson { d: m.d, theta0: Some(m.theta0), theta1: Some(m.theta1), r: Some(m.r), affine: m.affine }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
    pub passed: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<_> = self.checks.iter().filter(|c| !c.passed).collect();
        if failed.is_empty() {
            return write!(f, "all checks passed");
        }
        for (i, c) in failed.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} = {:e} (needs > {:e})", c.name, c.value, c.threshold)?;
        }
        Ok(())
    }
}

/// `∂R/∂z` and the Jacobian determinant of `Θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalLoci {
    pub c_sigma: TernaryForm,
    pub crit_theta: BinaryForm,
}

impl FiberedMap {
    pub fn new(theta0: BinaryForm, theta1: BinaryForm, r: TernaryForm) -> Result<Self> {
        let d = theta0.degree();
        if theta1.degree() != d || r.degree() != d {
            return Err(Error::InvalidArgument(format!(
                "component degrees differ: {}, {}, {}",
                d,
                theta1.degree(),
                r.degree()
            )));
        }
        if d < 2 {
            return Err(Error::InvalidArgument(format!("degree must be at least 2, got {d}")));
        }
        Ok(FiberedMap { d, theta0, theta1, r, affine: None })
    }

    /// Homogenise the skew product `(p(t), q(t, z))`; `d = deg p`.
    pub fn from_skew(p: UniPoly, q: AffineQ) -> Result<Self> {
        let d = p.degree();
        if q.z_degree() != d {
            return Err(Error::InvalidArgument(format!("q has z-degree {} but p has degree {}", q.z_degree(), d)));
        }
        for (l, part) in q.parts().iter().enumerate() {
            if !part.is_zero() && part.degree() + l > d {
                return Err(Error::InvalidArgument(format!(
                    "q has a term of total degree {} above {d}",
                    part.degree() + l
                )));
            }
        }
        let theta0 = BinaryForm::homogenize(&p, d)?;
        let theta1 = BinaryForm::monomial(d, d);
        let r = TernaryForm::homogenize(&q, d)?;
        let mut map = Self::new(theta0, theta1, r)?;
        map.affine = Some(Affine { p, q });
        Ok(map)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn theta(&self) -> [&BinaryForm; 2] {
        [&self.theta0, &self.theta1]
    }

    pub fn r(&self) -> &TernaryForm {
        &self.r
    }

    pub fn affine(&self) -> Option<&Affine> {
        self.affine.as_ref()
    }

    /// The same map with every component multiplied by `c`.
    pub fn rescaled(&self, c: C64) -> FiberedMap {
        FiberedMap {
            d: self.d,
            theta0: self.theta0.scale(c),
            theta1: self.theta1.scale(c),
            r: self.r.scale(c),
            affine: None,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let finite = [self.theta0.coeffs(), self.theta1.coeffs()]
            .into_iter()
            .flatten()
            .chain(self.r.z_coeffs().iter().flat_map(|b| b.coeffs()))
            .all(|c| c.re.is_finite() && c.im.is_finite());
        checks.push(ValidationCheck {
            name: "finite coefficients".into(),
            value: if finite { 1.0 } else { 0.0 },
            threshold: 0.0,
            passed: finite,
        });
        let (n0, n1) = (self.theta0.norm1(), self.theta1.norm1());
        let res = if finite && n0 > 0.0 && n1 > 0.0 {
            let a = self.theta0.scale(C64::new(1.0 / n0, 0.0));
            let b = self.theta1.scale(C64::new(1.0 / n1, 0.0));
            a.resultant(&b).norm()
        } else {
            0.0
        };
        checks.push(ValidationCheck {
            name: "resultant(theta0, theta1)".into(),
            value: res,
            threshold: VALIDATION_TOL,
            passed: res > VALIDATION_TOL,
        });
        let nr = self.r.norm1();
        let lead = if finite && nr > 0.0 { cabs(self.r.leading_z()) / nr } else { 0.0 };
        checks.push(ValidationCheck {
            name: "z^d coefficient of R".into(),
            value: lead,
            threshold: VALIDATION_TOL,
            passed: lead > VALIDATION_TOL,
        });
        let passed = checks.iter().all(|c| c.passed);
        ValidationReport { checks, passed }
    }

    /// Validate and precompute derivative forms.
    pub fn validated(self) -> Result<ValidatedMap> {
        let report = self.validate();
        if !report.passed {
            return Err(Error::Validation(Box::new(report)));
        }
        let dtheta = [
            [self.theta0.derivative(0), self.theta0.derivative(1)],
            [self.theta1.derivative(0), self.theta1.derivative(1)],
        ];
        let dr = [self.r.derivative(0), self.r.derivative(1), self.r.derivative(2)];
        let crit_theta =
            dtheta[0][0].mul(&dtheta[1][1]).add(&dtheta[0][1].mul(&dtheta[1][0]).scale(C64::new(-1.0, 0.0)))?;
        let crit = CriticalLoci { c_sigma: dr[2].clone(), crit_theta };
        Ok(ValidatedMap { map: self, report, dtheta, dr, crit, escape: OnceLock::new() })
    }
}

/// A map that passed validation, with cached derivative forms.
#[derive(Debug)]
pub struct ValidatedMap {
    map: FiberedMap,
    report: ValidationReport,
    dtheta: [[BinaryForm; 2]; 2],
    dr: [TernaryForm; 3],
    crit: CriticalLoci,
    pub(crate) escape: OnceLock<crate::green::EscapeData>,
}

impl Clone for ValidatedMap {
    fn clone(&self) -> Self {
        ValidatedMap {
            map: self.map.clone(),
            report: self.report.clone(),
            dtheta: self.dtheta.clone(),
            dr: self.dr.clone(),
            crit: self.crit.clone(),
            escape: self.escape.clone(),
        }
    }
}

impl Deref for ValidatedMap {
    type Target = FiberedMap;

    fn deref(&self) -> &FiberedMap {
        &self.map
    }
}

fn pick<R: Rng + ?Sized>(rs: &RootSet, rng: &mut R) -> [C64; 2] {
    rs.pick(rng.random::<f64>()).value.to_pair()
}

impl ValidatedMap {
    pub fn map(&self) -> &FiberedMap {
        &self.map
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    pub fn critical_loci(&self) -> &CriticalLoci {
        &self.crit
    }

    pub fn lift_base(&self, y: &[C64; 2]) -> [C64; 2] {
        [self.theta0.eval(y[0], y[1]), self.theta1.eval(y[0], y[1])]
    }

    pub fn lift(&self, x: &[C64; 3]) -> [C64; 3] {
        [self.theta0.eval(x[0], x[1]), self.theta1.eval(x[0], x[1]), self.r.eval(x[0], x[1], x[2])]
    }

    pub fn apply(&self, x: &P2) -> P2 {
        let fx = self.lift(x.coords());
        P2::new(fx).expect("validated maps have no nontrivial zeros")
    }

    pub fn apply_base(&self, y: &P1) -> P1 {
        P1::new(self.lift_base(y.coords())).expect("validated maps have no nontrivial zeros")
    }

    /// `∂R/∂z` at a lift.
    pub fn r_z(&self, x: &[C64; 3]) -> C64 {
        self.dr[2].eval(x[0], x[1], x[2])
    }

    pub fn det_dtheta(&self, y: &[C64; 2]) -> C64 {
        let j = |i: usize, k: usize| self.dtheta[i][k].eval(y[0], y[1]);
        j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0)
    }

    /// Full 3×3 Jacobian matrix of the lift.
    pub fn jacobian(&self, x: &[C64; 3]) -> [[C64; 3]; 3] {
        let z = C64::new(0.0, 0.0);
        let j = |i: usize, k: usize| self.dtheta[i][k].eval(x[0], x[1]);
        let r = |k: usize| self.dr[k].eval(x[0], x[1], x[2]);
        [[j(0, 0), j(0, 1), z], [j(1, 0), j(1, 1), z], [r(0), r(1), r(2)]]
    }

    /// Fubini–Study derivative modulus of `θ` on P¹.
    pub fn base_derivative(&self, y: &P1) -> f64 {
        let yc = y.coords();
        let th = self.lift_base(yc);
        let ny = norm2(yc);
        self.det_dtheta(yc).norm() * ny * ny / (self.d as f64 * norm2(&th).powi(2))
    }

    /// Fubini–Study Jacobian of `f` along the fiber direction; NaN on I(π).
    pub fn sectional_jacobian(&self, x: &P2) -> f64 {
        let xc = x.coords();
        let y = [xc[0], xc[1]];
        let fx = self.lift(xc);
        let ny = norm2(&y);
        if ny == 0.0 {
            return f64::NAN;
        }
        let nx = norm2(xc);
        let nf = norm2(&fx);
        self.r_z(xc).norm() * norm2(&fx[..2]) * nx * nx / (nf * nf * ny)
    }

    /// Fubini–Study (complex) Jacobian determinant of `f` on P².
    pub fn total_jacobian(&self, x: &P2) -> f64 {
        let xc = x.coords();
        let m = self.jacobian(xc);
        let det = crate::algebra::det(m.iter().map(|r| r.to_vec()).collect());
        let nx = norm2(xc);
        let nf = norm2(&self.lift(xc));
        cabs(det) * nx.powi(3) / (self.d as f64 * nf.powi(3))
    }

    /// `θ⁻¹(y)` with multiplicity.
    pub fn base_preimages(&self, y: &P1) -> Result<Vec<(P1, usize)>> {
        let rs = self.base_preimage_roots(y)?;
        Ok(rs
            .roots
            .iter()
            .map(|r| (P1::new(r.value.to_pair()).expect("roots are finite points"), r.multiplicity))
            .collect())
    }

    fn base_preimage_roots(&self, y: &P1) -> Result<RootSet> {
        let [y0, y1] = *y.coords();
        let form = self.theta0.scale(y1).add(&self.theta1.scale(-y0)).expect("equal degrees");
        form.roots(PREIMAGE_TOL)
    }

    /// Fiber equation over the base preimage `s` of the target `x`.
    fn fiber_preimage_roots(&self, s: [C64; 2], x: &[C64; 3]) -> Result<RootSet> {
        let th = self.lift_base(&s);
        let k = argmax(&[x[0], x[1]]);
        let lambda = cdiv(th[k], x[k]);
        let mut coeffs = self.r.fiber_form(s).coeffs().to_vec();
        // coeffs[l] multiplies a^(d-l) b^l
        coeffs[0] -= lambda * x[2];
        BinaryForm::new(coeffs).roots(PREIMAGE_TOL)
    }

    /// `f⁻¹(x)`: exactly `d²` points counted with multiplicity.
    pub fn preimages(&self, x: &P2) -> Result<Vec<(P2, usize)>> {
        let Some(y) = x.base() else {
            return Ok(vec![(P2::indeterminacy(), self.d * self.d)]);
        };
        let mut out = Vec::new();
        for base in self.base_preimage_roots(&y)?.roots {
            let s = base.value.to_pair();
            for fib in self.fiber_preimage_roots(s, x.coords())?.roots {
                let [a, b] = fib.value.to_pair();
                let p = P2::new([a * s[0], a * s[1], b]).expect("nonzero");
                out.push((p, base.multiplicity * fib.multiplicity));
            }
        }
        Ok(out)
    }

    /// One preimage drawn uniformly among the `d` base preimages and then the
    /// `d` fiber preimages, counting multiplicity.
    pub fn random_preimage<R: Rng + ?Sized>(&self, x: &P2, rng: &mut R) -> Result<P2> {
        let Some(y) = x.base() else {
            return Ok(P2::indeterminacy());
        };
        let s = pick(&self.base_preimage_roots(&y)?, rng);
        let [a, b] = pick(&self.fiber_preimage_roots(s, x.coords())?, rng);
        P2::new([a * s[0], a * s[1], b])
    }

    pub fn random_base_preimage<R: Rng + ?Sized>(&self, y: &P1, rng: &mut R) -> Result<P1> {
        P1::new(pick(&self.base_preimage_roots(y)?, rng))
    }

    /// Preimage of the fiber point `z` (affine fiber coordinate over
    /// `target`) inside the fiber over `source`, with `θ(source) = target`.
    pub fn random_fiber_preimage<R: Rng + ?Sized>(
        &self,
        source: &Fiber,
        target: &Fiber,
        z: [C64; 2],
        rng: &mut R,
    ) -> Result<[C64; 2]> {
        let x = target.lift_point(z);
        Ok(pick(&self.fiber_preimage_roots(*source.lift(), &x)?, rng))
    }

    /// Action on the fiber over `fiber.base()`.
    pub fn fiber_map(&self, fiber: &Fiber) -> FiberMap {
        let s = *fiber.lift();
        let image = self.lift_base(&s);
        let target = Fiber::new(P1::new(image).expect("nonzero"));
        let t = target.lift();
        let k = argmax(t);
        FiberMap {
            source: fiber.clone(),
            target: target.clone(),
            kappa: cdiv(image[k], t[k]),
            form: self.r.fiber_form(s),
        }
    }

    /// An `ε` with `f(U_ε) ⊂ U_{ε/2}` on `samples` points of
    /// `U_ε = {‖y‖∞ < ε‖z‖∞}`: half the largest such `ε` located by halving
    /// and bisection. Errors if none is found above `eps_min`.
    pub fn trapping_epsilon(&self, samples: usize, seed: u64, eps_min: f64) -> Result<f64> {
        let traps = |eps: f64| -> bool {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).all(|i| {
                // Half the samples sit on the boundary ‖y‖∞ = ε.
                let r0 = if i % 2 == 0 { 1.0 } else { rng.random::<f64>().sqrt() };
                let r1: f64 = rng.random::<f64>().sqrt();
                let (a0, a1): (f64, f64) = (rng.random(), rng.random());
                let (y0, y1) = if i % 4 < 2 { (r0, r1) } else { (r1, r0) };
                let y = [
                    C64::from_polar(eps * y0, a0 * std::f64::consts::TAU),
                    C64::from_polar(eps * y1, a1 * std::f64::consts::TAU),
                ];
                let fx = self.lift(&[y[0], y[1], C64::new(1.0, 0.0)]);
                cabs(fx[0]).max(cabs(fx[1])) < 0.5 * eps * cabs(fx[2])
            })
        };
        let mut eps = 1.0;
        while !traps(eps) {
            eps *= 0.5;
            if eps < eps_min {
                return Err(Error::DegenerateInput(format!(
                    "no trapping neighbourhood of I(pi) found down to eps = {eps_min:e}"
                )));
            }
        }
        if eps == 1.0 {
            return Ok(0.5);
        }
        let (mut lo, mut hi) = (eps, 2.0 * eps);
        for _ in 0..20 {
            let mid = 0.5 * (lo + hi);
            if traps(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * lo)
    }
}

/// Degree-2 skew product `(t² + p₁t + p₀, z² + (αt+β)z + γt² + δt + ε)`
/// with all seven coefficients drawn uniformly from the unit disk,
/// redrawn until validation and trapping certification pass.
pub fn random_skew_product(seed: u64) -> ValidatedMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut disk = || {
            let r: f64 = rng.random::<f64>().sqrt();
            C64::from_polar(r, rng.random::<f64>() * std::f64::consts::TAU)
        };
        let [p0, p1, al, be, ga, de, ep] = [(); 7].map(|_| disk());
        let one = C64::new(1.0, 0.0);
        let p = UniPoly::new(vec![p0, p1, one]);
        let q = AffineQ::new(vec![UniPoly::new(vec![ep, de, ga]), UniPoly::new(vec![be, al]), UniPoly::constant(one)]);
        let Ok(map) = FiberedMap::from_skew(p, q).and_then(FiberedMap::validated) else {
            continue;
        };
        if map.trapping_epsilon(1000, seed, 1e-6).is_ok() {
            return map;
        }
    }
}
