use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-manifold edge ({0}, {1}): shared by more than two elements")]
    NonManifoldEdge(usize, usize),

    #[error("degenerate element {0}: zero area")]
    DegenerateElement(usize),

    #[error("unsupported quadrature degree {degree} for {domain}")]
    UnsupportedDegree { domain: &'static str, degree: usize },

    #[error(
        "patch of element {element} is not unisolvent after {attempts} attempts (last size {size})"
    )]
    NotUnisolvent {
        element: usize,
        attempts: usize,
        size: usize,
    },

    #[error("mesh is not simplicial (element {0} has {1} vertices); run flux-only")]
    NotSimplicial(usize, usize),

    #[error("conjugate gradients did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("dense solve limited to n <= {limit}, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("unsupported boundary condition: {0}")]
    UnsupportedBoundary(&'static str),

    #[error("unknown problem '{name}'; available: {available}")]
    UnknownProblem { name: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
