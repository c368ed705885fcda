use thiserror::Error;

use crate::exponents::ExtReal;
use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("field uses coordinate `{name}` which does not exist in dimension {dim}")]
    Dimension { name: &'static str, dim: usize },

    #[error("{role} field violates its bounds: value {value} at {point:?} ({reason})")]
    BoundViolation { role: &'static str, value: f64, point: Vec<f64>, reason: &'static str },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),

    #[error("configuration is not subcritical at {point:?}: p* = {p_star}, q = {q}")]
    NotSubcritical { point: Vec<f64>, p_star: ExtReal, q: f64 },

    #[error("could not build a covering partition: {0}")]
    Covering(String),

    #[error("exponents are not conjugate: worst residual {residual:e} at {point:?}")]
    Conjugacy { point: Vec<f64>, residual: f64 },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("mesh inconsistency: {0}")]
    MeshInconsistency(String),

    #[error("input function is identically zero")]
    ZeroFunction,

    #[error("Luxemburg bracket could not be established after {0} steps")]
    BracketFailure(usize),

    #[error("line search failed at iteration {0}: gradient and energy are inconsistent")]
    LineSearch(usize),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::BracketFailure(_) | Error::LineSearch(_) | Error::MeshInconsistency(_) | Error::Covering(_)
        )
    }
}
