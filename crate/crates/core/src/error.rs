use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two roots too close for the plain partial-fraction residues.
    #[error("roots {0} and {1} are nearly coincident; use the paired-root path")]
    NearDoubleRoots(usize, usize),

    #[error("evaluation point is within {distance:e} of a panel end point (exclusion radius {limit:e})")]
    NearSingularity { distance: f64, limit: f64 },

    #[error("point lies outside the validity region of the expansion (|z - z0| = {distance:e}, radius {radius:e})")]
    OutOfValidity { distance: f64, radius: f64 },

    #[error("panel slope {max_slope:.3} exceeds the limit {limit:.3}; subdivide the panel")]
    SlopeViolation { max_slope: f64, limit: f64 },

    #[error("series did not converge: {0}")]
    Convergence(String),

    #[error("geometric configuration error: {0}")]
    Geometry(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
