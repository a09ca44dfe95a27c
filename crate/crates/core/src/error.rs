use thiserror::Error;

/// Errors surfaced by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("kernel evaluated at coincident points")]
    Singularity,
    #[error("matrix is singular or numerically singular: {0}")]
    Singular(String),
    #[error("GMRES did not converge in {iterations} iterations (final relative residual {final_residual:.3e})")]
    NotConverged {
        iterations: usize,
        final_residual: f64,
        history: Vec<f64>,
    },
    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),
    #[error("evaluation point {point:?} is too close to the surface (distance {distance:.3e})")]
    NearSurface { point: [f64; 3], distance: f64 },
    #[error("Bessel recurrence overflow at order {order}, argument {argument}")]
    BesselOverflow { order: usize, argument: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
