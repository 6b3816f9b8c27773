//! Delta calculus on a [`Grid`]: integration, forward differences,
//! regressivity and the generalized exponential.
//!
//! Dense segments use the composite trapezoid rule; jumps contribute
//! `μ(t)·g(t)` exactly, so on purely discrete scales every integral is the
//! literal finite sum.

use std::sync::Arc;

use crate::dsl::Expr;
use crate::error::{Error, Result};
use crate::timescale::Grid;

/// Values of a function at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                node: grid.nodes()[i],
                value: values[i],
            });
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    /// Samples an expression of `t` alone.
    pub fn sample(grid: Arc<Grid>, expr: &Expr) -> Result<Self> {
        if expr.uses_s() || expr.uses_x() {
            return Err(Error::InvalidConfig(format!("`{expr}` may only depend on t")));
        }
        let values = grid
            .nodes()
            .iter()
            .map(|&t| expr.eval(t, 0.0, 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.require_index(t)?])
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    /// `‖self − other‖∞`.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(sup_distance(&self.values, &other.values))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Δ-integral of node samples `values` between node indices `from ≤ to`.
///
/// `values` only needs to cover `0..=to`. Summation runs left to right in a
/// fixed order, which the solver relies on for reproducible output.
pub fn integrate_nodes(grid: &Grid, values: &[f64], from: usize, to: usize) -> f64 {
    let nodes = grid.nodes();
    let mut acc = 0.0;
    for i in from..to {
        let dt = nodes[i + 1] - nodes[i];
        acc += if grid.is_jump(i) {
            dt * values[i]
        } else {
            dt * (values[i] + values[i + 1]) * 0.5
        };
    }
    acc
}

fn bounds(grid: &Grid, from: f64, to: f64) -> Result<(usize, usize)> {
    let i = grid.require_index(from)?;
    let j = grid.require_index(to)?;
    if i > j {
        return Err(Error::ReversedBounds { from, to });
    }
    Ok((i, j))
}

/// `∫_from^to g(t) Δt`; both bounds must be grid nodes.
pub fn delta_integral(g: &GridFunction, from: f64, to: f64) -> Result<f64> {
    let (i, j) = bounds(&g.grid, from, to)?;
    Ok(integrate_nodes(&g.grid, &g.values, i, j))
}

/// Forward difference `(g(next) − g(t)) / (next − t)`.
///
/// At right-scattered nodes `next = σ(t)` and this is the exact Δ-derivative;
/// at right-dense nodes it is a first-order approximation of `g'`.
pub fn delta_derivative(g: &GridFunction, t: f64) -> Result<f64> {
    let i = g.grid.require_index(t)?;
    if i + 1 >= g.grid.len() {
        return Err(Error::AtRightEndpoint { t });
    }
    let nodes = g.grid.nodes();
    Ok((g.values[i + 1] - g.values[i]) / (nodes[i + 1] - nodes[i]))
}

/// Outcome of testing `1 + μ(t)p(t)` at every node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressivityCheck {
    pub regressive: bool,
    pub positively_regressive: bool,
    /// Where the check is tightest: the minimizer of `|1 + μp|` when `p` is
    /// not regressive, of `1 + μp` otherwise.
    pub worst_node: f64,
    pub worst_value: f64,
}

const REGRESSIVE_TOL: f64 = 1e-12;

pub fn check_regressive(p: &GridFunction) -> RegressivityCheck {
    regressivity_on(p, 0, p.grid.len())
}

fn regressivity_on(p: &GridFunction, from: usize, to: usize) -> RegressivityCheck {
    let nodes = p.grid.nodes();
    let mut min_abs = (f64::INFINITY, f64::NAN, f64::NAN);
    let mut min_signed = (f64::INFINITY, f64::NAN);
    for (i, &t) in nodes.iter().enumerate().take(to).skip(from) {
        let v = 1.0 + p.grid.mu(i) * p.values[i];
        if v.abs() < min_abs.0 {
            min_abs = (v.abs(), t, v);
        }
        if v < min_signed.0 {
            min_signed = (v, t);
        }
    }
    let regressive = min_abs.0 > REGRESSIVE_TOL;
    let positively_regressive = min_signed.0 > 0.0;
    let (worst_node, worst_value) = if regressive {
        (min_signed.1, min_signed.0)
    } else {
        (min_abs.1, min_abs.2)
    };
    RegressivityCheck {
        regressive,
        positively_regressive: regressive && positively_regressive,
        worst_node,
        worst_value,
    }
}

/// Generalized exponential `e_p(t, s)` for `s ≤ t`.
///
/// Jumps contribute `log(1 + μp)` (the cylinder transform times `μ`), dense
/// segments the trapezoid of `p`. Only positively regressive `p` is
/// supported; on `[s, t)` a zero of `1 + μp` is [`Error::NotRegressive`] and
/// a negative value is [`Error::NotPositivelyRegressive`].
pub fn exp_fn(p: &GridFunction, t: f64, s: f64) -> Result<f64> {
    let (i, j) = bounds(&p.grid, s, t)?;
    let check = regressivity_on(p, i, j);
    if i < j {
        if !check.regressive {
            return Err(Error::NotRegressive {
                node: check.worst_node,
                value: check.worst_value,
            });
        }
        if !check.positively_regressive {
            return Err(Error::NotPositivelyRegressive {
                node: check.worst_node,
                value: check.worst_value,
            });
        }
    }
    let nodes = p.grid.nodes();
    let mut log_e = 0.0;
    for k in i..j {
        let dt = nodes[k + 1] - nodes[k];
        log_e += if p.grid.is_jump(k) {
            (dt * p.values[k]).ln_1p()
        } else {
            dt * (p.values[k] + p.values[k + 1]) * 0.5
        };
    }
    Ok(log_e.exp())
}

/// Riemann integral over `[lo, hi]` (trapezoid across all nodes, gaps
/// bridged linearly) minus the Δ-integral, for nondecreasing `h`.
pub fn delta_vs_riemann_gap(h: &GridFunction, lo: f64, hi: f64) -> Result<f64> {
    if let Some(i) = h.values.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::NotNondecreasing {
            node: h.grid.nodes()[i],
        });
    }
    let (i, j) = bounds(&h.grid, lo, hi)?;
    let nodes = h.grid.nodes();
    let mut riemann = 0.0;
    for k in i..j {
        riemann += (nodes[k + 1] - nodes[k]) * (h.values[k] + h.values[k + 1]) * 0.5;
    }
    Ok(riemann - integrate_nodes(&h.grid, &h.values, i, j))
}
