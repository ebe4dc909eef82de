use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid black-hole parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("tortoise inversion failed at x = {x}: residual {residual:e}")]
    Inversion { x: f64, residual: f64 },
    #[error("quadrature did not converge: estimated error {estimate:e}")]
    Quadrature { estimate: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("grid configuration error: {0}")]
    Grid(String),
    #[error("boundary mass {mass:e} exceeds limit {limit:e}")]
    BoundaryMass { mass: f64, limit: f64 },
    #[error("wave operator not converged: Cauchy residual {residual:e} > {tol:e}")]
    NotConverged { residual: f64, tol: f64 },
    #[error("near-singular amplitude: 1 - kappa^2 = {0:e}")]
    NearSingular(f64),
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("fit did not converge: gradient norm {gradient:e}")]
    FitNotConverged { gradient: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
