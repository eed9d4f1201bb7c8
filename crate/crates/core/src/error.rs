use thiserror::Error;

/// Errors surfaced by every module of the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("polarization error: {0}")]
    Polarization(String),
    #[error("singular symplectic form")]
    Singular,
    #[error("degree mismatch: expected {expected}, found {found} ({context})")]
    Degree {
        expected: i32,
        found: i32,
        context: String,
    },
    #[error("series has no unit leading term")]
    NonUnit,
    #[error("inadmissible input: {0}")]
    Inadmissible(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: estimated error {achieved:e} above {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error("chart disagreement {deviation:e} at ({x}, {y})")]
    Gluing { x: f64, y: f64, deviation: f64 },
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
