//! Projective points, fibered maps, fibers, Jacobians and critical loci.

mod builtins;
mod fiber;
mod map;
mod projective;

pub use builtins::{builtin, desboves_original, skew, BUILTIN_MAPS, DESBOVES_LAMBDA, DESBOVES_PERMUTATION};
pub use fiber::{Fiber, FiberMap};
pub use map::{
    random_skew_product, Affine, CriticalLoci, FiberedMap, MapJson, ValidatedMap, ValidationCheck, ValidationReport,
    PREIMAGE_TOL, VALIDATION_TOL,
};
pub use projective::{norm2, norm_inf, ProjPoint, P1, P2};
