//! Lower and upper solutions, the sector-clamped kernel and the monotone
//! iterative technique.
//!
//! With a kernel nondecreasing in `x`, iterating the integral operator from a
//! lower solution `v` and an upper solution `w` yields
//! `v = v₀ ≤ v₁ ≤ … ≤ vₙ ≤ wₙ ≤ … ≤ w₁ ≤ w₀ = w`; the limits `alpha` (from
//! below) and `beta` (from above) bracket every solution in the sector
//! `[v, w]`.

use std::sync::Arc;

use crate::calculus::{sup_distance, GridFunction};
use crate::dsl::{check_monotone_in_x, EvalError, Expr, MonotoneWitness};
use crate::error::{Error, Result};
use crate::solver::{
    apply_operator, quadrature_tol, successive_approximations, Kernel, Node, SolveConfig, SolveReport,
};
use crate::timescale::{Grid, TimeScale};

/// Ordering tolerance for the monotone chains.
pub const CHAIN_SLACK: f64 = 1e-9;
/// Tolerance for sector containment of a computed solution.
pub const SECTOR_SLACK: f64 = 1e-9;

const PAIR_SLACK: f64 = 1e-12;

/// Default slack for the lower/upper inequalities: `1e-9` on discrete
/// grids, `10·C·h²` once quadrature error is involved.
pub fn default_verify_slack(grid: &Grid) -> f64 {
    if grid.has_dense_part() {
        10.0 * quadrature_tol(grid)
    } else {
        1e-9
    }
}

/// A lower solution `v` and an upper solution `w` with `v ≤ w`.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketPair {
    v: GridFunction,
    w: GridFunction,
}

impl BracketPair {
    pub fn new(v: GridFunction, w: GridFunction) -> Result<Self> {
        if !v.same_grid(&w) {
            return Err(Error::GridMismatch);
        }
        let nodes = v.grid().nodes();
        if let Some(i) = (0..nodes.len()).find(|&i| v.values()[i] > w.values()[i] + PAIR_SLACK) {
            return Err(Error::InvalidBracket(format!(
                "v({}) = {} exceeds w({}) = {}",
                nodes[i],
                v.values()[i],
                nodes[i],
                w.values()[i]
            )));
        }
        Ok(BracketPair { v, w })
    }

    pub fn v(&self) -> &GridFunction {
        &self.v
    }

    pub fn w(&self) -> &GridFunction {
        &self.w
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.v.grid()
    }
}

/// Result of checking one of the lower/upper inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub ok: bool,
    /// Largest signed defect; `≤ slack` means the inequality holds.
    pub worst_defect: f64,
    pub worst_node: f64,
}

fn check_grid(ts: &TimeScale, step_h: f64, g: &GridFunction) -> Result<Arc<Grid>> {
    if **g.grid() != ts.discretize(step_h)? {
        return Err(Error::GridMismatch);
    }
    Ok(g.grid().clone())
}

fn forcing(grid: &Arc<Grid>, f: &Expr) -> Result<Vec<f64>> {
    Ok(GridFunction::sample(grid.clone(), f)?.into_values())
}

fn worst(grid: &Grid, defects: impl Iterator<Item = f64>, slack: f64) -> Verification {
    let (worst_node, worst_defect) =
        grid.nodes()
            .iter()
            .copied()
            .zip(defects)
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |acc, (t, d)| if d > acc.1 { (t, d) } else { acc },
            );
    Verification {
        ok: worst_defect <= slack,
        worst_defect,
        worst_node,
    }
}

/// Checks `v(t) ≤ f(t) + ∫ₐᵗ k(t,s,v(s)) Δs + slack` at every node.
pub fn verify_lower(
    ts: &TimeScale,
    f: &Expr,
    k: &Expr,
    v: &GridFunction,
    step_h: f64,
    slack: f64,
) -> Result<Verification> {
    let grid = check_grid(ts, step_h, v)?;
    let image = apply_operator(&grid, &forcing(&grid, f)?, k, v.values())?;
    Ok(worst(&grid, v.values().iter().zip(&image).map(|(v, tv)| v - tv), slack))
}

/// Checks `w(t) ≥ f(t) + ∫ₐᵗ k(t,s,w(s)) Δs − slack` at every node.
pub fn verify_upper(
    ts: &TimeScale,
    f: &Expr,
    k: &Expr,
    w: &GridFunction,
    step_h: f64,
    slack: f64,
) -> Result<Verification> {
    let grid = check_grid(ts, step_h, w)?;
    let image = apply_operator(&grid, &forcing(&grid, f)?, k, w.values())?;
    Ok(worst(&grid, w.values().iter().zip(&image).map(|(w, tw)| tw - w), slack))
}

/// Sign of the penalty above the upper solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltySign {
    /// `k(t,s,w(s)) + z/(1+z²)` with `z = w(t) − p < 0`: pulls down toward `w`.
    #[default]
    Corrected,
    /// `k(t,s,w(s)) − z/(1+z²)`, the formula as originally published.
    Verbatim,
}

/// Where the bracket values compared against `p` are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SectorLookup {
    /// `v(s)`, `w(s)`: `p` stands for `x(s)`, so it is clamped to the sector
    /// at `s`. A solution inside `[v, w]` then sees `G = k` everywhere.
    #[default]
    Integration,
    /// `v(t)`, `w(t)` in the branch tests and penalties, `v(s)`, `w(s)` inside
    /// `k`, as the formula is usually printed.
    Evaluation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModifiedKernelConfig {
    pub penalty_sign: PenaltySign,
    pub lookup: SectorLookup,
}

/// `k` clamped to the sector `[v, w]` plus the bounded penalty `z/(1+z²)`.
///
/// With `τ` the lookup point (`s` or `t`, see [`SectorLookup`]):
///
/// ```text
/// G(t,s,p) = k(t,s,v(s)) + (v(τ)−p)/(1+(v(τ)−p)²)   p < v(τ)
///          = k(t,s,p)                                 v(τ) ≤ p ≤ w(τ)
///          = k(t,s,w(s)) ± (w(τ)−p)/(1+(w(τ)−p)²)   p > w(τ)
/// ```
#[derive(Debug, Clone, Copy)]
pub struct ModifiedKernel<'a> {
    k: &'a Expr,
    v: &'a GridFunction,
    w: &'a GridFunction,
    cfg: ModifiedKernelConfig,
}

fn penalty(z: f64) -> f64 {
    z / (1.0 + z * z)
}

pub fn modified_kernel<'a>(
    k: &'a Expr,
    v: &'a GridFunction,
    w: &'a GridFunction,
    cfg: ModifiedKernelConfig,
) -> Result<ModifiedKernel<'a>> {
    BracketPair::new(v.clone(), w.clone())?;
    Ok(ModifiedKernel { k, v, w, cfg })
}

impl ModifiedKernel<'_> {
    /// `G(t, s, p)` at grid nodes `t`, `s`.
    pub fn eval(&self, t: f64, s: f64, p: f64) -> Result<f64> {
        let grid = self.v.grid();
        let t = Node {
            index: grid.require_index(t)?,
            t,
        };
        let s = Node {
            index: grid.require_index(s)?,
            t: s,
        };
        Ok(Kernel::eval(self, t, s, p)?)
    }
}

impl Kernel for ModifiedKernel<'_> {
    fn eval(&self, t: Node, s: Node, p: f64) -> Result<f64, EvalError> {
        let (v, w) = (self.v.values(), self.w.values());
        let at = match self.cfg.lookup {
            SectorLookup::Integration => s.index,
            SectorLookup::Evaluation => t.index,
        };
        let (lo, hi) = (v[at], w[at]);
        if p < lo {
            Ok(self.k.eval(t.t, s.t, v[s.index])? + penalty(lo - p))
        } else if p <= hi {
            self.k.eval(t.t, s.t, p)
        } else {
            let base = self.k.eval(t.t, s.t, w[s.index])?;
            Ok(match self.cfg.penalty_sign {
                PenaltySign::Corrected => base + penalty(hi - p),
                PenaltySign::Verbatim => base - penalty(hi - p),
            })
        }
    }
}

/// Outcome of [`penalized_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedReport {
    pub solve: SolveReport,
    /// Residual of the solution against the unmodified kernel `k`.
    pub residual_original: f64,
}

/// Solves `φ = f + ∫ G(t,s,φ(s)) Δs` from `v`, then checks that the result
/// stays in `[v, w]` (within [`SECTOR_SLACK`]); inside the sector `G = k`, so
/// the result also solves the original equation.
///
/// The a-priori bounds use `max(L, 1)`: the penalty has slope at most 1.
pub fn penalized_solve(
    ts: &TimeScale,
    f: &Expr,
    k: &Expr,
    pair: &BracketPair,
    cfg: &SolveConfig,
    mk: ModifiedKernelConfig,
) -> Result<(GridFunction, PenalizedReport)> {
    cfg.validate()?;
    let grid = check_grid(ts, cfg.step_h, pair.v())?;
    let fv = forcing(&grid, f)?;
    let g = ModifiedKernel {
        k,
        v: &pair.v,
        w: &pair.w,
        cfg: mk,
    };
    let cfg_g = SolveConfig {
        lipschitz_l: cfg.lipschitz_l.max(1.0),
        ..*cfg
    };
    let (x, solve) = successive_approximations(&grid, &fv, &g, pair.v.values(), &cfg_g)?;
    let nodes = grid.nodes();
    for i in 0..nodes.len() {
        let below = pair.v.values()[i] - x[i];
        let above = x[i] - pair.w.values()[i];
        let magnitude = below.max(above);
        if magnitude > SECTOR_SLACK {
            return Err(Error::SectorEscape {
                node: nodes[i],
                magnitude,
            });
        }
    }
    let image = apply_operator(&grid, &fv, k, &x)?;
    let residual_original = sup_distance(&image, &x);
    Ok((
        GridFunction::new(grid, x)?,
        PenalizedReport {
            solve,
            residual_original,
        },
    ))
}

/// Which link of the chain `vₙ₋₁ ≤ vₙ ≤ wₙ ≤ wₙ₋₁` broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `vₙ < vₙ₋₁`
    LowerDecreased,
    /// `wₙ > wₙ₋₁`
    UpperIncreased,
    /// `vₙ > wₙ`
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingViolation {
    pub level: usize,
    pub node: f64,
    pub magnitude: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BracketOptions {
    /// Turn a failed monotone-in-x sample check into an error.
    pub strict_monotone: bool,
    /// Slack for the level-0 lower/upper checks; defaults to
    /// [`default_verify_slack`].
    pub verify_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BracketReport {
    pub n_iters: usize,
    /// `v₀ … vₙ`
    pub v_chain: Vec<GridFunction>,
    /// `w₀ … wₙ`
    pub w_chain: Vec<GridFunction>,
    /// `‖vₗ − wₗ‖∞` for each level `l = 0..=n`.
    pub gaps: Vec<f64>,
    pub ordering_violations: Vec<OrderingViolation>,
    /// Set when the sampled monotonicity check failed in non-strict mode.
    pub monotone_warning: Option<MonotoneWitness>,
    /// Limit from below, `vₙ`.
    pub alpha: GridFunction,
    /// Limit from above, `wₙ`.
    pub beta: GridFunction,
    pub gap: f64,
}

/// Node pairs sampled by the monotonicity pre-check.
const MONOTONE_CHECK_NODES: usize = 64;
const MONOTONE_CHECK_NX: usize = 16;

/// Runs both monotone sequences for `n_iters` levels and records every
/// ordering violation beyond [`CHAIN_SLACK`].
pub fn monotone_iterate(
    ts: &TimeScale,
    f: &Expr,
    k: &Expr,
    pair: &BracketPair,
    n_iters: usize,
    step_h: f64,
    opts: BracketOptions,
) -> Result<BracketReport> {
    if n_iters < 1 {
        return Err(Error::InvalidConfig("n_iters must be >= 1".into()));
    }
    let grid = check_grid(ts, step_h, pair.v())?;
    let slack = opts.verify_slack.unwrap_or_else(|| default_verify_slack(&grid));

    let lower = verify_lower(ts, f, k, pair.v(), step_h, slack)?;
    if !lower.ok {
        return Err(Error::InvalidBracket(format!(
            "v is not a lower solution: defect {:e} at t = {}",
            lower.worst_defect, lower.worst_node
        )));
    }
    let upper = verify_upper(ts, f, k, pair.w(), step_h, slack)?;
    if !upper.ok {
        return Err(Error::InvalidBracket(format!(
            "w is not an upper solution: defect {:e} at t = {}",
            upper.worst_defect, upper.worst_node
        )));
    }

    let x_lo = pair.v.values().iter().copied().fold(f64::INFINITY, f64::min);
    let x_hi = pair.w.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone_warning = check_monotone_in_x(k, &grid.thinned(MONOTONE_CHECK_NODES), x_lo, x_hi, MONOTONE_CHECK_NX)?;
    if let Some(w) = monotone_warning {
        if opts.strict_monotone {
            return Err(w.into());
        }
        log::warn!(
            "kernel decreases in x at t={}, s={} between x={} and x={}; chain ordering is not guaranteed",
            w.t,
            w.s,
            w.x_lo,
            w.x_hi
        );
    }

    let fv = forcing(&grid, f)?;
    let chain = |start: &GridFunction| -> Result<Vec<Vec<f64>>> {
        let mut levels = vec![start.values().to_vec()];
        for _ in 0..n_iters {
            let next = apply_operator(&grid, &fv, k, levels.last().unwrap())?;
            levels.push(next);
        }
        Ok(levels)
    };
    let (vs, ws) = rayon::join(|| chain(pair.v()), || chain(pair.w()));
    let (vs, ws) = (vs?, ws?);

    let nodes = grid.nodes();
    let mut violations = Vec::new();
    let mut record = |level: usize, kind: ViolationKind, diffs: &mut dyn Iterator<Item = f64>| {
        for (i, d) in diffs.enumerate() {
            if d > CHAIN_SLACK {
                violations.push(OrderingViolation {
                    level,
                    node: nodes[i],
                    magnitude: d,
                    kind,
                });
            }
        }
    };
    for n in 1..=n_iters {
        record(
            n,
            ViolationKind::LowerDecreased,
            &mut vs[n - 1].iter().zip(&vs[n]).map(|(a, b)| a - b),
        );
        record(
            n,
            ViolationKind::UpperIncreased,
            &mut ws[n].iter().zip(&ws[n - 1]).map(|(a, b)| a - b),
        );
        record(
            n,
            ViolationKind::Crossed,
            &mut vs[n].iter().zip(&ws[n]).map(|(a, b)| a - b),
        );
    }

    let gaps: Vec<f64> = vs.iter().zip(&ws).map(|(a, b)| sup_distance(a, b)).collect();
    let to_fn = |vals: Vec<f64>| GridFunction::new(grid.clone(), vals);
    let v_chain = vs.into_iter().map(to_fn).collect::<Result<Vec<_>>>()?;
    let w_chain = ws.into_iter().map(to_fn).collect::<Result<Vec<_>>>()?;
    let alpha = v_chain.last().unwrap().clone();
    let beta = w_chain.last().unwrap().clone();
    Ok(BracketReport {
        n_iters,
        gap: *gaps.last().unwrap(),
        gaps,
        ordering_violations: violations,
        monotone_warning,
        alpha,
        beta,
        v_chain,
        w_chain,
    })
}

/// Largest amount by which `x` leaves the band between `alpha` and `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketCheck {
    pub ok: bool,
    pub worst_violation: f64,
    pub worst_node: f64,
}

/// Checks `min(α,β) − 1e-9 ≤ x ≤ max(α,β) + 1e-9` at every node.
pub fn extremal_bracket_check(x: &GridFunction, report: &BracketReport) -> Result<BracketCheck> {
    if !x.same_grid(&report.alpha) {
        return Err(Error::GridMismatch);
    }
    let nodes = x.grid().nodes();
    let mut out = BracketCheck {
        ok: true,
        worst_violation: f64::NEG_INFINITY,
        worst_node: nodes[0],
    };
    for (i, &t) in nodes.iter().enumerate() {
        let (a, b) = (report.alpha.values()[i], report.beta.values()[i]);
        let xi = x.values()[i];
        let excess = (a.min(b) - xi).max(xi - a.max(b));
        if excess > out.worst_violation {
            out.worst_violation = excess;
            out.worst_node = t;
        }
    }
    out.ok = out.worst_violation <= SECTOR_SLACK;
    Ok(out)
}
