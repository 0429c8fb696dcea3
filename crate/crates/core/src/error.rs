use thiserror::Error;

/// Errors raised by the solvers and their supporting types.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cylinder radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("coefficient evaluated outside the working range |u| <= {limit}: u = {u}")]
    OutOfRange { u: f64, limit: f64 },
    #[error("domain length {0} leaves no unit window (need T > 1)")]
    DomainTooShort(f64),
    #[error("grid with {n} cells on [0, {t_len}] does not align unit windows with nodes")]
    MisalignedGrid { t_len: f64, n: usize },
    #[error("grid function values must be finite")]
    NonFinite,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid contact interval [{x0}, {x1}] on [0, {t_len}]")]
    InvalidInterval { x0: f64, x1: f64, t_len: f64 },
    #[error("contact force G must be non-negative, got {0}")]
    NegativeForce(f64),
    #[error("integration blew up at x = {x} (u = {u}, u' = {up})")]
    BlowUp { x: f64, u: f64, up: f64 },
    #[error("coercivity lost at x = {x}: a(u) = {a} below half the floor {a0}")]
    CoercivityLoss { x: f64, a: f64, a0: f64 },
    #[error(
        "Newton iteration did not converge in {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("converged contact force G = {0} is negative: no contact at this length")]
    NegativeG(f64),
    #[error("solution violates the window constraint: min Bu = {min_bu:e} at x = {at}")]
    AdmissibilityViolation { min_bu: f64, at: f64 },
    #[error("no symmetric single-well solution with length {0}")]
    NoTurningPoint(f64),
    #[error("solution is not converged (residual {0:e})")]
    NotConverged(f64),
    #[error("continuation step failed at T = {t_len} after {halvings} halvings")]
    StepFailure { t_len: f64, halvings: usize },
    #[error("minimizer stopped after {0} iterations")]
    MaxIterations(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
