use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error:e} after {evals} evaluations")]
    Convergence { estimate: f64, error: f64, evals: usize },

    #[error("root bracket invalid: h({lo:e}) = {h_lo:e}, h({hi:e}) = {h_hi:e}")]
    Bracket { lo: f64, hi: f64, h_lo: f64, h_hi: f64 },

    #[error("branch precondition violated: {0}")]
    Branch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
