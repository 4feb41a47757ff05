use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} is outside its domain (value {value})")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("trajectory left the valid domain at t = {t}")]
    LeftDomain { t: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("need at least 3 usable points for a slope fit, got {0}")]
    InsufficientData(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
