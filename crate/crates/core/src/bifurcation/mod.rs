//! Parameter families, grid scans of `Λ_σ(λ)` and `Λ_σ,n(λ)`, discrete
//! Laplacian densities and bump pairings.

mod density;
mod family;
mod grid;
mod scan;

pub use density::{
    bif_compare, bump_pairing, bump_pairing_bound, gaussian_blur, laplacian_density, sub_mean_value_fraction, Bump,
    CompareRow, Density, NOISE_FACTOR,
};
pub use family::{builtin_family, FamilyTerm, ParamFamily, Rect, BUILTIN_FAMILIES};
pub use grid::{PgmMapping, ScanGrid};
pub use scan::{
    scan_sigma, scan_sigma_periodic, BaseSample, Estimator, ScanParams, PERIODIC_SCAN_CAP, SHARED_BASE_INDEX,
};
