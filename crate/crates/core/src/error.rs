use thiserror::Error;

use crate::geometry::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("root solver did not converge: {unpolished} root(s) above residual tolerance {tol:e} (worst {worst:e})")]
    NonConvergence { unpolished: usize, tol: f64, worst: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("composition degree {degree} exceeds cap {cap}")]
    DegreeOverflow { degree: usize, cap: usize },
    #[error("map failed validation: {0}")]
    Validation(Box<ValidationReport>),
    #[error("Green function is infinite at a point of the indeterminacy locus")]
    Infinite,
    #[error("tolerance {tol:e} unreachable within {cap} iterations")]
    ToleranceUnreachable { tol: f64, cap: usize },
    #[error("degenerate fiber: {0}")]
    DegenerateFiber(String),
    #[error("singular sample: dropped {dropped} of {total} points near the critical locus")]
    SingularSample { dropped: usize, total: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::DegenerateFiber(_)
                | Error::SingularSample { .. }
                | Error::ToleranceUnreachable { .. }
                | Error::Infinite
                | Error::Validation(_)
        )
    }
}
