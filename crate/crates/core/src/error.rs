//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Malformed input text. `offset` is the 1-based byte position of the
    /// first byte that could not be consumed (one past the end for
    /// truncated input).
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    /// Variable index is outside the declared chart dimension.
    #[error("variable x{var} exceeds chart dimension {dim} (at byte {offset})")]
    DimensionViolation { offset: usize, var: usize, dim: usize },

    #[error("division by zero")]
    DivisionByZero,

    #[error("log of non-positive argument {arg}")]
    LogNonPositive { arg: f64 },

    #[error("sqrt of negative argument {arg}")]
    SqrtNegative { arg: f64 },

    #[error("power with non-integer exponent {exponent} requires positive base, got {base}")]
    PowNonPositiveBase { base: f64, exponent: f64 },

    /// Finite-difference stencil or evaluation point left the field's domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("jacobian is singular (|det| = {det:.3e})")]
    SingularJacobian { det: f64 },

    #[error("metric is singular at sample point {point:?}")]
    SingularMetric { point: Vec<f64> },

    /// The Ricci tensor is not symmetric, so the normal form does not exist.
    #[error("Ricci tensor asymmetric (max defect {defect:.3e} exceeds {tolerance:.3e})")]
    AsymmetricRicci { defect: f64, tolerance: f64 },

    #[error("fibre coordinate must be positive, got t = {t}")]
    NonPositiveFibre { t: f64 },

    #[error("dimension {dim} too small: {context}")]
    DimensionTooSmall { dim: usize, context: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("coefficients not symmetric in lower indices (defect {defect:.3e} at {point:?})")]
    NotSymmetric { defect: f64, point: Vec<f64> },

    #[error("trace not zero (defect {defect:.3e} at {point:?})")]
    NotTraceFree { defect: f64, point: Vec<f64> },

    /// Numerical integration produced a non-finite or runaway state.
    #[error("state blew up at t = {time} (|state| = {norm:.3e})")]
    BlowUp { time: f64, norm: f64 },

    #[error("integration failed at t = {time}: {source}")]
    Integration { time: f64, source: Box<Error> },

    #[error("degenerate configuration: {0}")]
    DegenerateFit(String),

    #[error("path too short: {0}")]
    PathTooShort(String),

    /// Scenario schema violation; `pointer` is a JSON pointer into the file.
    #[error("scenario error at {pointer}: {message}")]
    Scenario { pointer: String, message: String },
}

impl Error {
    pub fn scenario(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario { pointer: pointer.into(), message: message.into() }
    }
}
