use thiserror::Error;

use crate::mat2::Cx;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not traceless (trace = {trace})")]
    NotTraceless { trace: Cx },

    #[error("tree product needs at least one step polynomial")]
    EmptySteps,

    #[error("spectral grid is empty")]
    EmptyGrid,

    #[error("invalid spectral grid: {0}")]
    InvalidGrid(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("reflection coefficient undefined at xi = {xi} (a = 0)")]
    UndefinedReflection { xi: f64 },

    #[error("|r(xi)| >= 1 at xi = {xi} for normal dispersion; continuous energy is undefined")]
    NonPhysicalReflection { xi: f64 },

    #[error(
        "oracle did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e}"
    )]
    OracleNotConverged { estimate: f64, tolerance: f64 },

    #[error("analytic reference failed validation: deviation {deviation:e} at xi = {xi} exceeds {limit:e}")]
    AnalyticGateFailed { deviation: f64, xi: f64, limit: f64 },

    #[error("convergence study needs a strictly increasing list of at least 3 grid sizes")]
    InvalidGridSizes,
}
