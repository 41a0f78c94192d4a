use thiserror::Error;

/// Errors raised anywhere in the canonical-metric pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    /// The surface has no first cohomology, so there is nothing to minimize over.
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error("rank deficiency: {0}")]
    RankDeficiency(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degenerate conformal class: {0}")]
    DegenerateClass(String),
    #[error("conformal factor not normalized: integral is {0}, expected 1")]
    Normalization(f64),
    #[error("conformal factor must be strictly positive and finite (face {face}: {value})")]
    NonPositiveRho { face: usize, value: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
