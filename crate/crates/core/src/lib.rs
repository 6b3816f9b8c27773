//! Volterra integral dynamic equations
//!
//! ```text
//! x(t) = f(t) + ∫ₐᵗ k(t, s, x(s)) Δs,   t ∈ [a, b] ∩ T
//! ```
//!
//! on bounded time scales `T` (finite unions of closed intervals and isolated
//! points). The crate provides the delta calculus on a discretization of `T`,
//! a small expression language for `f` and `k`, successive approximations
//! with a-priori error bounds, and the upper/lower solution machinery
//! (sector-clamped kernel, monotone iteration toward extremal solutions).

pub mod bracketing;
pub mod calculus;
pub mod dsl;
pub mod error;
pub mod solver;
pub mod timescale;

pub use bracketing::{
    extremal_bracket_check, modified_kernel, monotone_iterate, penalized_solve, verify_lower, verify_upper,
    BracketOptions, BracketPair, BracketReport, ModifiedKernel, ModifiedKernelConfig, OrderingViolation, PenaltySign,
    SectorLookup, Verification, ViolationKind,
};
pub use calculus::{
    check_regressive, delta_derivative, delta_integral, delta_vs_riemann_gap, exp_fn, GridFunction, RegressivityCheck,
};
pub use dsl::{parse, Expr, ParseError};
pub use error::{Error, Result};
pub use solver::{apriori_bound, picard_solve, residual, uniqueness_crosscheck, SolveConfig, SolveReport, StopReason};
pub use timescale::{Component, Grid, PointClass, TimeScale};
