use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain mismatch: {left} vs {right}")]
    DomainMismatch { left: String, right: String },

    #[error("field length {got} does not match domain size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("exponent p = {p} outside (2, {p_bar}]")]
    InvalidExponent { p: f64, p_bar: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operation undefined for the zero field")]
    ZeroField,

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("hypotheses unmet: E(0) = {e0:e} is not below the well depth d = {d:e}")]
    HypothesesUnmet { e0: f64, d: f64 },

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("step failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("data error: {0}")]
    Data(String),

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

pub type Result<T> = std::result::Result<T, Error>;
