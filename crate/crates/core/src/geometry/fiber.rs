use serde::Serialize;

use super::projective::{argmax, P1, P2};
use crate::algebra::{cabs, BinaryForm, UniPoly, C64};

/// The line `L_a` over a base point, parameterised by `(a:b) ↦ [a·s₀ : a·s₁ : b]`.
/// `(0:1)` is the point `I(π)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fiber {
    base: P1,
    lift: [C64; 2],
}

impl Fiber {
    /// Lift with max modulus 1 and first nonzero coordinate real positive.
    pub fn new(base: P1) -> Self {
        let c = *base.coords();
        let first = if c[0] != C64::new(0.0, 0.0) { c[0] } else { c[1] };
        let phase = first.conj() / cabs(first);
        let mut lift = c.map(|x| x * phase);
        let k = argmax(&lift);
        let m = cabs(lift[k]);
        lift = lift.map(|x| x / m);
        let j = if lift[0] != C64::new(0.0, 0.0) { 0 } else { 1 };
        lift[j] = C64::new(cabs(lift[j]), 0.0);
        Fiber { base, lift }
    }

    pub fn base(&self) -> &P1 {
        &self.base
    }

    pub fn lift(&self) -> &[C64; 2] {
        &self.lift
    }

    pub fn lift_point(&self, ab: [C64; 2]) -> [C64; 3] {
        [ab[0] * self.lift[0], ab[0] * self.lift[1], ab[1]]
    }

    pub fn point(&self, ab: [C64; 2]) -> P2 {
        P2::new(self.lift_point(ab)).expect("nonzero fiber parameter")
    }

    /// Point with affine fiber coordinate `z`, i.e. `(a:b) = (1:z)`.
    pub fn point_at(&self, z: C64) -> P2 {
        self.point([C64::new(1.0, 0.0), z])
    }

    /// Fiber parameter `(a:b)` of a point on this fiber.
    pub fn parameter(&self, x: &P2) -> [C64; 2] {
        let c = x.coords();
        let k = argmax(&self.lift);
        [c[k] / self.lift[k], c[2]]
    }
}

/// `f` restricted to a fiber: `(a:b) ↦ (κ·a^d : R_s(a,b))` in the target
/// fiber's parameter.
#[derive(Clone, Debug, Serialize)]
pub struct FiberMap {
    pub source: Fiber,
    pub target: Fiber,
    pub kappa: C64,
    pub form: BinaryForm,
}

impl FiberMap {
    pub fn apply(&self, ab: [C64; 2]) -> [C64; 2] {
        let d = self.form.degree() as i32;
        [self.kappa * ab[0].powi(d), self.form.eval(ab[0], ab[1])]
    }

    /// The affine fiber polynomial `z ↦ R_s(1, z)/κ`.
    pub fn affine_poly(&self) -> UniPoly {
        UniPoly::new(self.form.coeffs().iter().map(|&c| c / self.kappa).collect())
    }
}
