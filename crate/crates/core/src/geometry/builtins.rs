use crate::algebra::{AffineQ, BinaryForm, TernaryForm, UniPoly, C64};
use crate::error::{Error, Result};

use super::map::FiberedMap;

pub const BUILTIN_MAPS: &[&str] = &["torus", "chebyshev", "basilica_base", "cheb_coupled", "desboves"];

/// Parameter of the shipped Desboves map.
pub const DESBOVES_LAMBDA: f64 = 0.5;

/// Coordinate change to the adapted frame: adapted `(y₀, y₁, z)` is
/// original `(x, z, y)`, i.e. `adapted[i] = original[DESBOVES_PERMUTATION[i]]`.
pub const DESBOVES_PERMUTATION: [usize; 3] = [0, 2, 1];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Skew product from real coefficients: `p` low to high, `q` as
/// `(k, l, c)` for `c·t^k z^l`.
pub fn skew(p: &[f64], q: &[(usize, usize, f64)]) -> Result<FiberedMap> {
    let d = p.len() - 1;
    let mut parts = vec![vec![c(0.0); d + 1]; d + 1];
    for &(k, l, v) in q {
        parts[l][k] += c(v);
    }
    FiberedMap::from_skew(UniPoly::from_real(p), AffineQ::new(parts.into_iter().map(UniPoly::new).collect()))
}

/// The Desboves map in its original coordinates,
/// `[−x(x³+2z³) : y(z³−x³+λ(x³+y³+z³)) : z(2x³+z³)]`.
pub fn desboves_original(lambda: f64, p: [C64; 3]) -> [C64; 3] {
    let [x, y, z] = p;
    let (x3, y3, z3) = (x.powi(3), y.powi(3), z.powi(3));
    [-x * (x3 + z3 * 2.0), y * (z3 - x3 + (x3 + y3 + z3) * lambda), z * (x3 * 2.0 + z3)]
}

fn desboves(lambda: f64) -> Result<FiberedMap> {
    // Θ₀ = −y₀⁴ − 2y₀y₁³, Θ₁ = 2y₀³y₁ + y₁⁴,
    // R = z((λ−1)y₀³ + (1+λ)y₁³) + λz⁴.
    let theta0 = BinaryForm::from_real(&[-1.0, 0.0, 0.0, -2.0, 0.0]);
    let theta1 = BinaryForm::from_real(&[0.0, 2.0, 0.0, 0.0, 1.0]);
    let r = TernaryForm::from_z_coeffs(vec![
        BinaryForm::zero(4),
        BinaryForm::from_real(&[lambda - 1.0, 0.0, 0.0, 1.0 + lambda]),
        BinaryForm::zero(2),
        BinaryForm::zero(1),
        BinaryForm::from_real(&[lambda]),
    ])?;
    FiberedMap::new(theta0, theta1, r)
}

pub fn builtin(name: &str) -> Result<FiberedMap> {
    match name {
        "torus" => skew(&[0.0, 0.0, 1.0], &[(0, 2, 1.0)]),
        "chebyshev" => skew(&[-2.0, 0.0, 1.0], &[(0, 2, 1.0)]),
        "basilica_base" => skew(&[-1.0, 0.0, 1.0], &[(0, 2, 1.0)]),
        "cheb_coupled" => skew(&[-2.0, 0.0, 1.0], &[(0, 2, 1.0), (1, 0, 1.0)]),
        "desboves" => desboves(DESBOVES_LAMBDA),
        _ => Err(Error::Config(format!("unknown built-in map {name:?} (known: {})", BUILTIN_MAPS.join(", ")))),
    }
}
