use thiserror::Error;

/// Errors raised by schedule evaluation, conversions, solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} is undefined at t = {t}")]
    SingularTime { t: f64, what: String },

    #[error("drift is not finite at t = {t}: {reason}")]
    SingularDrift { t: f64, reason: String },

    #[error("time change u is not strictly increasing near t = {t}")]
    NonMonotoneTimeChange { t: f64 },

    #[error("adaptive quadrature on [{a}, {b}] missed tolerance {tol:e} (error estimate {estimate:e})")]
    QuadratureFailure { a: f64, b: f64, tol: f64, estimate: f64 },

    #[error("path grid does not match the target grid at index {index}: expected {expected}, found {found}")]
    GridMismatch { index: usize, expected: f64, found: f64 },

    #[error("{steps} steps do not divide the fine Wiener grid of {n_fine} steps")]
    IndivisibleGrid { steps: usize, n_fine: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn singular(t: f64, what: impl Into<String>) -> Self {
        Error::SingularTime { t, what: what.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
