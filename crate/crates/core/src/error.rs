use thiserror::Error;

/// Errors produced anywhere in the discretization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate cut: {0}")]
    DegenerateCut(String),

    /// The pre-image search found no root in its bracket; the mesh is too
    /// coarse to resolve the level set.
    #[error("geometry unresolved: {0}")]
    GeometryUnresolved(String),

    #[error("singular search direction: {0}")]
    SingularDirection(String),

    #[error("degenerate deformation: {0}")]
    DeformationDegenerate(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("matrix is not positive definite: {0}")]
    NotSpd(String),

    #[error("solver did not reach the tolerance after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Prefix the message with a location, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{ctx}: {m}")),
            Error::DegenerateCut(m) => Error::DegenerateCut(format!("{ctx}: {m}")),
            Error::GeometryUnresolved(m) => Error::GeometryUnresolved(format!("{ctx}: {m}")),
            Error::SingularDirection(m) => Error::SingularDirection(format!("{ctx}: {m}")),
            Error::DeformationDegenerate(m) => Error::DeformationDegenerate(format!("{ctx}: {m}")),
            Error::InvalidGeometry(m) => Error::InvalidGeometry(format!("{ctx}: {m}")),
            Error::NotSpd(m) => Error::NotSpd(format!("{ctx}: {m}")),
            Error::Internal(m) => Error::Internal(format!("{ctx}: {m}")),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
