use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel is singular at coincident points (|x - x'| = 0); use interval integrals instead")]
    SingularKernel,

    #[error("both horizon lengths are zero; the nonlocal operator is undefined")]
    EmptyHorizon,

    #[error("position {x} lies outside the domain [{min}, {max}]")]
    OutsideDomain { x: f64, min: f64, max: f64 },

    #[error("point {0} is not on a boundary of the domain")]
    NotOnBoundary(f64),

    #[error("grid resolution too coarse: {got} points per wavelength, need at least {need}")]
    UnderResolved { got: usize, need: usize },

    #[error("long-wave divergence: the power-law phase velocity is unbounded at k = 0")]
    LongWaveDivergence,

    #[error("inadmissible kernel: {0}")]
    InadmissibleKernel(String),

    #[error("conflicting constraints on dof {dof}: {first} vs {second}")]
    ConflictingConstraint { dof: usize, first: f64, second: f64 },

    #[error("stiffness matrix is not positive definite: non-positive pivot at dof {dof}")]
    NotPositiveDefinite { dof: usize },

    #[error("evaluation point {0} is not a row of the operator matrix")]
    UnknownEvaluationPoint(f64),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, stripped of any configuration context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
