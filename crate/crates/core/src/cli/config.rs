use std::path::PathBuf;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bifurcation::{builtin_family, BaseSample, Bump, Estimator, ParamFamily, Rect};
use crate::error::{Error, Result};
use crate::geometry::{builtin, FiberedMap};
use crate::green::DEFAULT_TOL;

/// A named built-in or an inline definition.
#[derive(Clone, Debug, PartialEq)]
pub enum Spec<T> {
    Builtin(String),
    Inline(T),
}

impl<'de, T: serde::de::DeserializeOwned> Deserialize<'de> for Spec<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(Spec::Builtin(s)),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v).map(Spec::Inline).map_err(D::Error::custom),
            _ => Err(D::Error::custom("expected a built-in name or an inline object")),
        }
    }
}

impl<T: Serialize> Serialize for Spec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Spec::Builtin(name) => s.serialize_str(name),
            Spec::Inline(v) => v.serialize(s),
        }
    }
}

impl Spec<FiberedMap> {
    pub fn resolve(&self) -> Result<FiberedMap> {
        match self {
            Spec::Builtin(name) => builtin(name).map_err(|e| Error::Config(e.to_string())),
            Spec::Inline(m) => Ok(m.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Spec::Builtin(name) => name.clone(),
            Spec::Inline(_) => "inline".into(),
        }
    }
}

impl Spec<ParamFamily> {
    pub fn resolve(&self) -> Result<ParamFamily> {
        match self {
            Spec::Builtin(name) => builtin_family(name),
            Spec::Inline(f) => Ok(f.clone()),
        }
    }
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenPlane {
    /// `G(t, z)` over a `z`-rectangle in the fiber over `t`.
    #[default]
    Fiber,
    /// `G_θ(t, 1)` over a `t`-rectangle.
    Base,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreenParams {
    pub plane: GreenPlane,
    /// Base point of the fiber plane.
    pub t: [f64; 2],
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub pgm: bool,
}

impl Default for GreenParams {
    fn default() -> Self {
        GreenParams {
            plane: GreenPlane::Fiber,
            t: [0.0, 0.0],
            rect: Rect { re: [-2.0, 2.0], im: [-2.0, 2.0] },
            nx: 64,
            ny: 64,
            pgm: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    /// `μ_θ` on P¹.
    Theta,
    /// `μ_f` on P².
    #[default]
    F,
    /// `μ_a` on the fiber over `fiber`.
    Fiber,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleParams {
    pub measure: Measure,
    pub samples: usize,
    /// Affine base point for the fiber measure.
    pub fiber: [f64; 2],
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams { measure: Measure::F, samples: 10_000, fiber: [0.0, 0.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LyapunovParams {
    pub samples: usize,
    /// Multiple of SE allowed below the lower bounds.
    pub k: f64,
}

impl Default for LyapunovParams {
    fn default() -> Self {
        LyapunovParams { samples: 20_000, k: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BjParams {
    pub samples: usize,
    pub k: f64,
    /// Absolute floor added to `k·SE`.
    pub floor: f64,
}

impl Default for BjParams {
    fn default() -> Self {
        BjParams { samples: 20_000, k: 3.0, floor: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicParams {
    pub n: Vec<usize>,
    /// Sample size of the direct `Λ_σ` estimate.
    pub samples: usize,
    pub k: f64,
    /// Allowed `|Λ_σ,n − Λ̂_σ|` at the largest `n`, before `k·SE`.
    pub band: f64,
}

impl Default for PeriodicParams {
    fn default() -> Self {
        PeriodicParams { n: vec![3, 4, 5, 6], samples: 20_000, k: 3.0, band: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompParams {
    pub direct_samples: usize,
    pub base_samples: usize,
    pub fiber_samples: usize,
}

impl Default for DecompParams {
    fn default() -> Self {
        DecompParams { direct_samples: 40_000, base_samples: 2000, fiber_samples: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareParams {
    pub n: Vec<usize>,
    pub bump: Bump,
    /// Allowed relative gap of the largest `n`.
    #[serde(default = "default_relative_band")]
    pub relative_band: f64,
}

fn default_relative_band() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BifParams {
    pub nx: usize,
    pub ny: usize,
    pub samples: usize,
    pub estimator: Estimator,
    pub base_sample: BaseSample,
    /// Overrides the family's domain.
    pub domain: Option<Rect>,
    /// Scan `Λ_σ,n` instead of `Λ_σ`.
    pub periodic_n: Option<usize>,
    /// Gaussian blur of the potential in cells; 0 disables.
    pub blur: f64,
    pub max_violation_fraction: f64,
    pub compare: Option<CompareParams>,
}

impl Default for BifParams {
    fn default() -> Self {
        BifParams {
            nx: 64,
            ny: 64,
            samples: 5000,
            estimator: Estimator::default(),
            base_sample: BaseSample::default(),
            domain: None,
            periodic_n: None,
            blur: 0.0,
            max_violation_fraction: 0.01,
            compare: None,
        }
    }
}

/// Everything a run needs; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub map: Option<Spec<FiberedMap>>,
    #[serde(default)]
    pub family: Option<Spec<ParamFamily>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub green: GreenParams,
    #[serde(default)]
    pub sample: SampleParams,
    #[serde(default)]
    pub lyapunov: LyapunovParams,
    #[serde(default)]
    pub bj_check: BjParams,
    #[serde(default)]
    pub periodic_check: PeriodicParams,
    #[serde(default)]
    pub decomp_check: DecompParams,
    #[serde(default)]
    pub bif_scan: BifParams,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least {min}, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    /// Range checks that the types cannot express.
    pub fn check(&self) -> Result<()> {
        positive("tol", self.tol)?;
        let g = &self.green;
        at_least("green.nx", g.nx, 1)?;
        at_least("green.ny", g.ny, 1)?;
        if !g.rect.is_valid() {
            return Err(Error::Config("green.rect is empty or non-finite".into()));
        }
        at_least("sample.samples", self.sample.samples, 1)?;
        at_least("lyapunov.samples", self.lyapunov.samples, 2)?;
        positive("lyapunov.k", self.lyapunov.k)?;
        at_least("bj_check.samples", self.bj_check.samples, 2)?;
        positive("bj_check.k", self.bj_check.k)?;
        if !(self.bj_check.floor >= 0.0) {
            return Err(Error::Config("bj_check.floor must be nonnegative".into()));
        }
        let p = &self.periodic_check;
        if p.n.is_empty() || p.n.contains(&0) {
            return Err(Error::Config("periodic_check.n must list periods >= 1".into()));
        }
        at_least("periodic_check.samples", p.samples, 2)?;
        positive("periodic_check.k", p.k)?;
        positive("periodic_check.band", p.band)?;
        let dc = &self.decomp_check;
        at_least("decomp_check.direct_samples", dc.direct_samples, 2)?;
        at_least("decomp_check.base_samples", dc.base_samples, 2)?;
        at_least("decomp_check.fiber_samples", dc.fiber_samples, 1)?;
        let b = &self.bif_scan;
        at_least("bif_scan.nx", b.nx, 3)?;
        at_least("bif_scan.ny", b.ny, 3)?;
        at_least("bif_scan.samples", b.samples, 2)?;
        if b.domain.is_some_and(|r| !r.is_valid()) {
            return Err(Error::Config("bif_scan.domain is empty or non-finite".into()));
        }
        if b.periodic_n == Some(0) {
            return Err(Error::Config("bif_scan.periodic_n must be >= 1".into()));
        }
        if !(b.blur >= 0.0 && b.blur.is_finite()) {
            return Err(Error::Config("bif_scan.blur must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&b.max_violation_fraction) {
            return Err(Error::Config("bif_scan.max_violation_fraction must lie in [0, 1]".into()));
        }
        if let Some(c) = &b.compare {
            if c.n.is_empty() || c.n.contains(&0) {
                return Err(Error::Config("bif_scan.compare.n must list periods >= 1".into()));
            }
            positive("bif_scan.compare.bump.radius", c.bump.radius)?;
            positive("bif_scan.compare.relative_band", c.relative_band)?;
        }
        Ok(())
    }
}
