use thiserror::Error;

/// Errors produced anywhere in the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("mesh generation failed: {0}")]
    MeshGeneration(String),

    #[error("special function argument out of range: {0}")]
    Domain(String),

    #[error("quadrature produced a non-finite value for element pair ({0}, {1})")]
    Quadrature(usize, usize),

    #[error("matrix is singular (zero pivot at index {pivot})")]
    Singular { pivot: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{operator} is near-singular at kappa = {kappa} (normalized sigma_min = {sigma_min:.3e}); {spectrum} resonance")]
    Resonance {
        operator: &'static str,
        spectrum: &'static str,
        kappa: f64,
        sigma_min: f64,
    },

    #[error("evaluation point ({x}, {y}) is within {distance:.3e} of the boundary (minimum {min_distance:.3e})")]
    NearField {
        x: f64,
        y: f64,
        distance: f64,
        min_distance: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
