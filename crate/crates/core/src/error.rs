use thiserror::Error;

use crate::dsl::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything the numerical layer can fail with.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {t} is not a member of the time scale")]
    PointNotInTimeScale { t: f64 },

    #[error("invalid step size {h}: must be finite and > 0")]
    InvalidStep { h: f64 },

    #[error("invalid time scale: {0}")]
    InvalidTimeScale(String),

    #[error("time scale literal, byte {offset}: {message}")]
    TimeScaleSyntax { offset: usize, message: String },

    #[error("{t} is not a node of the grid")]
    NodeNotOnGrid { t: f64 },

    #[error("integration bounds reversed: from {from} > to {to}")]
    ReversedBounds { from: f64, to: f64 },

    #[error("forward difference undefined at the right endpoint {t}")]
    AtRightEndpoint { t: f64 },

    #[error("not regressive: 1 + mu*p = {value} at t = {node}")]
    NotRegressive { node: f64, value: f64 },

    #[error("not positively regressive: 1 + mu*p = {value} at t = {node}")]
    NotPositivelyRegressive { node: f64, value: f64 },

    #[error("grid function decreases after t = {node}")]
    NotNondecreasing { node: f64 },

    #[error("grid function value {value} at t = {node} is not finite")]
    NonFiniteValue { node: f64, value: f64 },

    #[error("expected {expected} values for the grid, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Domain(#[from] EvalError),

    #[error("iterate {iteration} is not finite at t = {node}")]
    NonFiniteIterate { iteration: usize, node: f64 },

    #[error("solution leaves the sector at t = {node} by {magnitude:e}")]
    SectorEscape { node: f64, magnitude: f64 },

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),

    #[error("kernel is not nondecreasing in x: k({t}, {s}, {x_hi}) < k({t}, {s}, {x_lo})")]
    NonMonotoneKernel { t: f64, s: f64, x_lo: f64, x_hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
