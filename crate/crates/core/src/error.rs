use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {what} at node {index}")]
    NonFinite { what: String, index: usize },

    #[error("Sobolev index must be nonnegative, got {0}")]
    NegativeSobolevIndex(f64),

    #[error("Sobolev index must exceed 5/2, got {0}")]
    SobolevIndexTooSmall(f64),

    #[error("unknown interpolation method `{0}` (expected `trig` or `tricubic`)")]
    UnknownMethod(String),

    #[error("density must be positive everywhere, min(1 + rho_bar) = {min} at node {index}")]
    NonPositiveDensity { min: f64, index: usize },

    #[error("Newton iteration did not converge after {iterations} steps, last residual {residual:e}")]
    NewtonNotConverged { iterations: usize, residual: f64 },

    #[error("Krylov solve stagnated after {iterations} iterations, residual trace {trace:?}")]
    KrylovStagnation { iterations: usize, trace: Vec<f64> },

    #[error("internal consistency check `{check}` failed: discrepancy {discrepancy:e} > {tolerance:e}")]
    Inconsistent {
        check: String,
        discrepancy: f64,
        tolerance: f64,
    },

    #[error("flow map inversion failed at node {node}: residual {residual:e}")]
    InversionFailed { node: usize, residual: f64 },

    #[error("flow map degenerate: min det(dphi) = {min_det} at t = {t}")]
    JacobianDegenerate { t: f64, min_det: f64 },

    #[error("CFL violation at t = {t}: dt = {dt} exceeds {limit}")]
    Cfl { t: f64, dt: f64, limit: f64 },

    #[error("time step {dt} does not divide horizon {horizon}")]
    StepMismatch { dt: f64, horizon: f64 },

    #[error("power series did not converge within {max_terms} terms (last term norm {last_term:e})")]
    SeriesNotConverged { max_terms: usize, last_term: f64 },

    #[error("convention gate failed: {0}")]
    ConventionGate(String),

    #[error("probe search failed: no candidate exceeded {floor:e}; tried {tried:?}")]
    ProbeSearch { floor: f64, tried: Vec<[f64; 3]> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
