//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("mesh is not aligned with the interface: {0}")]
    MisalignedInterface(String),

    #[error("self-intersecting polygon")]
    SelfIntersectingPolygon,

    #[error("singular mass matrix (degenerate cell or edge)")]
    SingularMass,

    #[error("matrix factorization failed; system is not positive definite")]
    NotPositiveDefinite,

    #[error("iterative solver did not reach the requested tolerance (residual {residual:.3e})")]
    SolverDidNotConverge { residual: f64 },

    #[error("case has no exact solution")]
    NoExactSolution,

    #[error("incompatible meshes: {0}")]
    IncompatibleMeshes(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
