//! Sampled diagnostics of a kernel's dependence on `x`.

use super::{EvalError, Expr};
use crate::error::{Error, Result};
use crate::timescale::Grid;

/// Sampled Lipschitz constant of `k` in `x`.
///
/// A maximum over finitely many difference quotients: a lower estimate of
/// the true constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub l: f64,
    pub sample_count: usize,
    pub x_range: (f64, f64),
}

/// Where a kernel was seen decreasing in `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneWitness {
    pub t: f64,
    pub s: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl From<MonotoneWitness> for Error {
    fn from(w: MonotoneWitness) -> Self {
        Error::NonMonotoneKernel {
            t: w.t,
            s: w.s,
            x_lo: w.x_lo,
            x_hi: w.x_hi,
        }
    }
}

fn x_samples(x_lo: f64, x_hi: f64, n_x: usize) -> Result<Vec<f64>> {
    if !(x_lo.is_finite() && x_hi.is_finite() && x_lo <= x_hi) {
        return Err(Error::InvalidConfig(format!("bad x range [{x_lo}, {x_hi}]")));
    }
    if n_x < 2 {
        return Err(Error::InvalidConfig(format!("n_x = {n_x}, need at least 2")));
    }
    let dx = (x_hi - x_lo) / (n_x - 1) as f64;
    Ok((0..n_x)
        .map(|i| if i + 1 == n_x { x_hi } else { x_lo + i as f64 * dx })
        .collect())
}

/// Calls `visit(t, s)` for every node pair with `s ≤ t`.
fn for_each_pair(grid: &Grid, mut visit: impl FnMut(f64, f64) -> Result<(), EvalError>) -> Result<()> {
    let nodes = grid.nodes();
    for (i, &t) in nodes.iter().enumerate() {
        for &s in &nodes[..=i] {
            visit(t, s)?;
        }
    }
    Ok(())
}

/// Max of `|k(t,s,x+δ) − k(t,s,x−δ)| / 2δ` over node pairs `s ≤ t` and `n_x`
/// uniform samples of `[x_lo, x_hi]`, with `δ = (x_hi − x_lo) / (10 n_x)`.
pub fn estimate_lipschitz(k: &Expr, grid: &Grid, x_lo: f64, x_hi: f64, n_x: usize) -> Result<LipschitzEstimate> {
    let xs = x_samples(x_lo, x_hi, n_x)?;
    let delta = (x_hi - x_lo) / (10 * n_x) as f64;
    let mut l: f64 = 0.0;
    let mut count = 0;
    if delta > 0.0 {
        for_each_pair(grid, |t, s| {
            for &x in &xs {
                let q = (k.eval(t, s, x + delta)? - k.eval(t, s, x - delta)?).abs() / (2.0 * delta);
                l = l.max(q);
                count += 1;
            }
            Ok(())
        })?;
    }
    Ok(LipschitzEstimate {
        l,
        sample_count: count,
        x_range: (x_lo, x_hi),
    })
}

/// Checks `k(t,s,x₂) ≥ k(t,s,x₁) − 1e-12` for adjacent samples `x₁ < x₂`.
/// Returns the first failing sample pair, if any.
pub fn check_monotone_in_x(k: &Expr, grid: &Grid, x_lo: f64, x_hi: f64, n_x: usize) -> Result<Option<MonotoneWitness>> {
    let xs = x_samples(x_lo, x_hi, n_x)?;
    let mut witness = None;
    for_each_pair(grid, |t, s| {
        if witness.is_some() {
            return Ok(());
        }
        let mut prev = k.eval(t, s, xs[0])?;
        for w in xs.windows(2) {
            let next = k.eval(t, s, w[1])?;
            if next < prev - 1e-12 {
                witness = Some(MonotoneWitness {
                    t,
                    s,
                    x_lo: w[0],
                    x_hi: w[1],
                });
                break;
            }
            prev = next;
        }
        Ok(())
    })?;
    Ok(witness)
}
