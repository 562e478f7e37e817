use thiserror::Error;

/// Errors produced by the geometry, quadrature and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polytope is empty, lower dimensional or unbounded: {0}")]
    EmptyOrUnbounded(String),

    #[error("degenerate polytope: {0}")]
    Degenerate(String),

    #[error("facet normal {0:?} is not rational within tolerance")]
    IrrationalNormal(Vec<f64>),

    #[error("integrand is not finite at a quadrature node after {0} subdivisions")]
    NonFinite(usize),

    #[error("no touching plane exists for this truncation height: {0}")]
    SlopeCondition(String),

    #[error("point lies on the boundary of the polytope")]
    BoundaryPoint,

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("energy {value} is outside the attainable range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("estimated heat capacity {0} is not positive")]
    NegativeHeatCapacity(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
