use thiserror::Error;

/// Errors raised by grid construction, the solvers and the run driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid annulus: {0}")]
    InvalidAnnulus(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("momentum box half-width {p_max} is below the provable support bound {bound}")]
    MomentumBoxTooSmall { p_max: f64, bound: f64 },

    #[error("initial data violates its support constraint: {0}")]
    SupportViolation(String),

    #[error("radius {r} lies outside the open annulus ({r1}, {r2})")]
    Domain { r: f64, r1: f64, r2: f64 },

    #[error("unit CFL required: |dt| = {dt} but dr = {dr}")]
    CflViolation { dt: f64, dr: f64 },

    #[error("insufficient field history: {0}")]
    InsufficientHistory(String),

    #[error("integrator step size underflow (dt = {0})")]
    StepUnderflow(f64),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
