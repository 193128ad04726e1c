use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("series orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("division by a series whose constant term {constant:e} is not a unit")]
    NonUnitDivisor { constant: f64 },
    #[error("{function} is undefined at constant term {constant:e}")]
    DomainViolation {
        function: &'static str,
        constant: f64,
    },
    #[error("series must have at least one finite coefficient")]
    InvalidSeries,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("expected {expected} values, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected a function of {expected} variable(s), found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("regularity violated at {point:?}: |m| = {value:e} <= {threshold:e}")]
    RegularityViolation {
        point: Vec<f64>,
        value: f64,
        threshold: f64,
    },
    #[error("triangular system inconsistent at {point:?}: first component {value:e}")]
    InconsistentSystem { point: Vec<f64>, value: f64 },
    #[error("closedness check failed at level {level}: residual {residual:e} > {tolerance:e}")]
    ClosednessViolation {
        level: usize,
        residual: f64,
        tolerance: f64,
    },
    #[error("Jacobian is singular at {point:?}")]
    SingularJacobian { point: Vec<f64> },
    #[error("evaluation failed at {point:?}: {source}")]
    AtPoint {
        point: Vec<f64>,
        source: alloc::boxed::Box<Error>,
    },
    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn at_point(self, point: &[f64]) -> Self {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint {
                point: point.to_vec(),
                source: alloc::boxed::Box::new(e),
            },
        }
    }
}
