use thiserror::Error;

/// Errors produced by graph construction and the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid discrete or metric graph input (duplicate edge, self-loop,
    /// disconnected graph, bad vertex id, nonpositive length, ...).
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// Invalid boundary-condition data (non-Hermitian A B†, rank-deficient
    /// (A, B), dimension mismatch with the vertex degree, ...).
    #[error("invalid vertex condition: {0}")]
    InvalidCondition(String),

    /// A + ikB could not be inverted when evaluating a scattering matrix.
    #[error("singular boundary-condition matrix A + ikB at k = {k}")]
    SingularCondition { k: f64 },

    /// The path-family linear system is (numerically) singular at this k.
    #[error("path-family system is singular at k = {k}; perturb k slightly and retry")]
    SingularSystem { k: f64 },

    /// Requested eigenvectors at a k that is not a spectral point.
    #[error(
        "k = {k} is not an eigenvalue: smallest singular value of (1 - U) is {smallest:.3e} \
         (threshold {threshold:.3e})"
    )]
    NotAnEigenvalue {
        k: f64,
        smallest: f64,
        threshold: f64,
    },

    /// The star-graph closed form is evaluated at a pole of the Green's function.
    #[error("star Green's function has a pole at k = {k} (secular determinant ~ {magnitude:.3e})")]
    OraclePole { k: f64, magnitude: f64 },

    /// An enumeration exceeded its explosion guard.
    #[error("{what} enumeration exceeded the guard of {limit} items")]
    ExplosionGuard { what: &'static str, limit: usize },

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
