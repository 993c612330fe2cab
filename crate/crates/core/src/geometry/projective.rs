use serde::{Serialize, Serializer};

use crate::algebra::{cabs, cdiv, C64};
use crate::error::{Error, Result};

/// Point of P^(N-1), normalised so that the largest coordinate is exactly 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint<const N: usize> {
    coords: [C64; N],
}

impl<const N: usize> Serialize for ProjPoint<N> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords.as_slice().serialize(s)
    }
}

pub type P1 = ProjPoint<2>;
pub type P2 = ProjPoint<3>;

const ONE: C64 = C64::new(1.0, 0.0);

impl<const N: usize> ProjPoint<N> {
    pub fn new(coords: [C64; N]) -> Result<Self> {
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::DegenerateInput("non-finite projective coordinate".into()));
        }
        if coords.iter().all(|c| cabs(*c) == 0.0) {
            return Err(Error::DegenerateInput("zero vector is not a projective point".into()));
        }
        Ok(Self::normalized(coords))
    }

    /// Normalise a nonzero finite lift. Already-normalised input is returned
    /// unchanged.
    fn normalized(coords: [C64; N]) -> Self {
        if coords.iter().any(|&c| c == ONE) && coords.iter().all(|c| cabs(*c) <= 1.0 + 4.0 * f64::EPSILON) {
            return ProjPoint { coords };
        }
        let k = argmax(&coords);
        let p = coords[k];
        let mut out = coords.map(|c| cdiv(c, p));
        out[k] = ONE;
        ProjPoint { coords: out }
    }

    pub fn coords(&self) -> &[C64; N] {
        &self.coords
    }

    /// Fubini–Study chordal distance `‖x∧y‖ / (‖x‖‖y‖)`, in `[0, 1]`.
    pub fn chordal(&self, other: &Self) -> f64 {
        let (x, y) = (&self.coords, &other.coords);
        let mut wedge = 0.0;
        for i in 0..N {
            for j in (i + 1)..N {
                wedge += (x[i] * y[j] - x[j] * y[i]).norm_sqr();
            }
        }
        (wedge.sqrt() / (norm2(x) * norm2(y))).min(1.0)
    }
}

pub(crate) fn argmax<const N: usize>(c: &[C64; N]) -> usize {
    let mut k = 0;
    for i in 1..N {
        if cabs(c[i]) > cabs(c[k]) {
            k = i;
        }
    }
    k
}

pub fn norm2(c: &[C64]) -> f64 {
    c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm_inf(c: &[C64]) -> f64 {
    c.iter().map(|&x| cabs(x)).fold(0.0, f64::max)
}

impl P1 {
    pub fn from_affine(t: C64) -> Self {
        Self::normalized([t, ONE])
    }

    pub fn infinity() -> Self {
        ProjPoint { coords: [ONE, C64::new(0.0, 0.0)] }
    }

    /// `t = y₀/y₁`, `None` at infinity.
    pub fn affine(&self) -> Option<C64> {
        let [a, b] = self.coords;
        (b != C64::new(0.0, 0.0)).then(|| a / b)
    }
}

impl P2 {
    /// `[t : 1 : z]`.
    pub fn from_affine(t: C64, z: C64) -> Self {
        Self::normalized([t, ONE, z])
    }

    /// `I(π) = [0:0:1]`.
    pub fn indeterminacy() -> Self {
        ProjPoint { coords: [C64::new(0.0, 0.0), C64::new(0.0, 0.0), ONE] }
    }

    pub fn is_indeterminacy(&self) -> bool {
        self.coords[0] == C64::new(0.0, 0.0) && self.coords[1] == C64::new(0.0, 0.0)
    }

    /// `π[y₀:y₁:z] = [y₀:y₁]`.
    pub fn base(&self) -> Option<P1> {
        (!self.is_indeterminacy()).then(|| P1::normalized([self.coords[0], self.coords[1]]))
    }

    /// `(t, z)` in the chart `y₁ = 1`.
    pub fn affine(&self) -> Option<(C64, C64)> {
        let [a, b, z] = self.coords;
        (b != C64::new(0.0, 0.0)).then(|| (a / b, z / b))
    }
}
