pub mod algebra;
pub mod bifurcation;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod green;
pub mod lyapunov;
pub mod sampling;

pub use error::{Error, Result};
