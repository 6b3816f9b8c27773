//! Successive approximations for `x(t) = f(t) + ∫ₐᵗ k(t, s, x(s)) Δs`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::calculus::{integrate_nodes, sup_distance, GridFunction};
use crate::dsl::{EvalError, Expr};
use crate::error::{Error, Result};
use crate::timescale::{Grid, TimeScale};

/// Constant `C` in the quadrature error model `C·h²` of the trapezoid
/// iteration. The linear test `x = 1 + ∫x` on `[0,1]` measures
/// `|x(1) − e| ≈ 0.23·h²`; 1.0 leaves headroom for other smooth kernels.
pub const QUADRATURE_CONSTANT: f64 = 1.0;

/// `C·h²` for grids with a dense part; discrete grids integrate exactly.
pub fn quadrature_tol(grid: &Grid) -> f64 {
    if grid.has_dense_part() {
        QUADRATURE_CONSTANT * grid.step_h() * grid.step_h()
    } else {
        0.0
    }
}

/// Node of the grid: its index and position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub index: usize,
    pub t: f64,
}

/// Anything usable as the kernel of the integral operator.
pub trait Kernel: Sync {
    fn eval(&self, t: Node, s: Node, x: f64) -> Result<f64, EvalError>;
}

impl Kernel for Expr {
    fn eval(&self, t: Node, s: Node, x: f64) -> Result<f64, EvalError> {
        Expr::eval(self, t.t, s.t, x)
    }
}

/// Applies `x ↦ f + ∫ₐᵗ k(t, s, x(s)) Δs` at every node.
///
/// Rows run in parallel but each integral is summed sequentially in node
/// order, so the output does not depend on the thread count. On failure the
/// error of the leftmost failing row is reported.
pub fn apply_operator<K: Kernel + ?Sized>(grid: &Grid, f: &[f64], kernel: &K, x: &[f64]) -> Result<Vec<f64>> {
    let nodes = grid.nodes();
    let rows: Vec<Result<f64, EvalError>> = (0..nodes.len())
        .into_par_iter()
        .map_init(Vec::new, |buf: &mut Vec<f64>, i| {
            buf.clear();
            let t = Node { index: i, t: nodes[i] };
            for j in 0..=i {
                buf.push(kernel.eval(t, Node { index: j, t: nodes[j] }, x[j])?);
            }
            Ok(f[i] + integrate_nodes(grid, buf, 0, i))
        })
        .collect();
    rows.into_iter().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Stop once `‖xₙ − xₙ₋₁‖∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub step_h: f64,
    /// Lipschitz constant of `k` in `x`, used for the a-priori bounds.
    pub lipschitz_l: f64,
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol = {} must be > 0", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.step_h.is_finite() && self.step_h > 0.0) {
            return Err(Error::InvalidStep { h: self.step_h });
        }
        if !(self.lipschitz_l.is_finite() && self.lipschitz_l >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lipschitz_L = {} must be >= 0",
                self.lipschitz_l
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Successive iterates within `tol`.
    Converged,
    /// The a-priori tail `M Σ_{j>n} (L(b−a))ʲ/j!` dropped below `tol`.
    BoundTail,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖xₙ − xₙ₋₁‖∞` for `n = 1..=iterations`.
    pub deltas: Vec<f64>,
    /// `apriori_bound(M, L, b − a, n)` for the same `n`.
    pub apriori_bounds: Vec<f64>,
    /// `max_t |x(t) − f(t) − ∫ₐᵗ k(t,s,x(s)) Δs|` for the returned iterate.
    pub residual: f64,
    pub stop_reason: StopReason,
    pub lipschitz_l: f64,
    /// `sup |x₀ − seed|`.
    pub m: f64,
}

/// `M·Lᵏ·spanᵏ/k!`, evaluated in log space so large `k` neither overflows
/// nor loses the factorial.
pub fn apriori_bound(m: f64, l: f64, span: f64, k: usize) -> f64 {
    let x = l * span;
    if m == 0.0 || x == 0.0 {
        return 0.0;
    }
    let ln = k as f64 * x.ln() - ln_factorial(k);
    m * ln.exp()
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// `M Σ_{j>n} xʲ/j!` with `x = L·span`, summed term by term (the closed form
/// `M(e^x − Σ_{j≤n} xʲ/j!)` cancels catastrophically).
pub fn apriori_tail(m: f64, l: f64, span: f64, n: usize) -> f64 {
    let x = l * span;
    if m == 0.0 || x == 0.0 {
        return 0.0;
    }
    let mut j = n + 1;
    let mut term = apriori_bound(1.0, x, 1.0, j);
    let mut sum = 0.0;
    loop {
        if !term.is_finite() {
            return f64::INFINITY;
        }
        sum += term;
        j += 1;
        term *= x / j as f64;
        // terms decrease once j > x; stop when they no longer register
        if j as f64 > x && term <= sum * f64::EPSILON {
            break;
        }
    }
    m * sum
}

fn grid_for(ts: &TimeScale, step_h: f64, f: &GridFunction) -> Result<Arc<Grid>> {
    let grid = ts.discretize(step_h)?;
    if **f.grid() != grid {
        return Err(Error::GridMismatch);
    }
    Ok(f.grid().clone())
}

fn sample_forcing(grid: &Arc<Grid>, f: &Expr) -> Result<Vec<f64>> {
    Ok(GridFunction::sample(grid.clone(), f)?.into_values())
}

fn check_finite(values: &[f64], grid: &Grid, iteration: usize) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFiniteIterate {
            iteration,
            node: grid.nodes()[i],
        }),
        None => Ok(()),
    }
}

/// Picard iteration against an arbitrary kernel on the seed's grid.
pub(crate) fn successive_approximations<K: Kernel + ?Sized>(
    grid: &Arc<Grid>,
    f: &[f64],
    kernel: &K,
    seed: &[f64],
    cfg: &SolveConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let span = grid.b() - grid.a();
    let l = cfg.lipschitz_l;

    let mut prev = apply_operator(grid, f, kernel, seed)?;
    check_finite(&prev, grid, 0)?;
    let m = sup_distance(&prev, seed);

    let mut deltas = Vec::new();
    let mut bounds = Vec::new();
    let mut stop = StopReason::MaxIter;
    for n in 1..=cfg.max_iter {
        let next = apply_operator(grid, f, kernel, &prev)?;
        check_finite(&next, grid, n)?;
        let delta = sup_distance(&next, &prev);
        deltas.push(delta);
        bounds.push(apriori_bound(m, l, span, n));
        prev = next;
        if delta <= cfg.tol {
            stop = StopReason::Converged;
            break;
        }
        if apriori_tail(m, l, span, n) <= cfg.tol {
            stop = StopReason::BoundTail;
            break;
        }
    }
    let image = apply_operator(grid, f, kernel, &prev)?;
    let residual = sup_distance(&image, &prev);
    log::debug!(
        "successive approximations: {} iterations, stop {:?}, residual {:e}",
        deltas.len(),
        stop,
        residual
    );
    Ok((
        prev,
        SolveReport {
            iterations: deltas.len(),
            deltas,
            apriori_bounds: bounds,
            residual,
            stop_reason: stop,
            lipschitz_l: l,
            m,
        },
    ))
}

/// Solves the equation by successive approximations from `seed`:
/// `x₀ = f + ∫ k(·,·,seed)`, `xₙ = f + ∫ k(·,·,xₙ₋₁)`.
///
/// The seed must be sampled on `ts.discretize(cfg.step_h)`.
pub fn picard_solve(
    ts: &TimeScale,
    f: &Expr,
    k: &Expr,
    seed: &GridFunction,
    cfg: &SolveConfig,
) -> Result<(GridFunction, SolveReport)> {
    cfg.validate()?;
    let grid = grid_for(ts, cfg.step_h, seed)?;
    let fv = sample_forcing(&grid, f)?;
    let (x, report) = successive_approximations(&grid, &fv, k, seed.values(), cfg)?;
    Ok((GridFunction::new(grid, x)?, report))
}

/// Defect `max_t |x(t) − f(t) − ∫ₐᵗ k(t,s,x(s)) Δs|` of a candidate solution.
pub fn residual(ts: &TimeScale, f: &Expr, k: &Expr, x: &GridFunction, step_h: f64) -> Result<f64> {
    let grid = grid_for(ts, step_h, x)?;
    let fv = sample_forcing(&grid, f)?;
    let image = apply_operator(&grid, &fv, k, x.values())?;
    Ok(sup_distance(&image, x.values()))
}

/// Solves from two seeds and returns the sup distance of the two limits.
/// Under the Lipschitz hypothesis the solution is unique, so this should be
/// within a few `tol`.
pub fn uniqueness_crosscheck(
    ts: &TimeScale,
    f: &Expr,
    k: &Expr,
    seed_a: &GridFunction,
    seed_b: &GridFunction,
    cfg: &SolveConfig,
) -> Result<f64> {
    if !seed_a.same_grid(seed_b) {
        return Err(Error::GridMismatch);
    }
    let (xa, _) = picard_solve(ts, f, k, seed_a, cfg)?;
    let (xb, _) = picard_solve(ts, f, k, seed_b, cfg)?;
    xa.sup_distance(&xb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn cfg(step_h: f64, l: f64) -> SolveConfig {
        SolveConfig {
            tol: 1e-10,
            max_iter: 200,
            step_h,
            lipschitz_l: l,
        }
    }

    fn zero_seed(ts: &TimeScale, h: f64) -> GridFunction {
        GridFunction::constant(Arc::new(ts.discretize(h).unwrap()), 0.0).unwrap()
    }

    #[test]
    fn apriori_bound_examples() {
        assert_eq!(apriori_bound(1.0, 1.0, 1.0, 1), 1.0);
        assert!((apriori_bound(2.0, 3.0, 1.0, 2) - 9.0).abs() < 1e-12);
        assert_eq!(apriori_bound(5.0, 0.0, 3.0, 4), 0.0);
        // no overflow for large k
        let b = apriori_bound(1.0, 10.0, 1.0, 400);
        assert!(b.is_finite() && b < 1e-300);
    }

    #[test]
    fn apriori_tail_matches_closed_form() {
        for (x, n) in [(0.5, 1), (1.0, 3), (2.0, 5), (10.0, 12)] {
            let head: f64 = (0..=n).map(|j| apriori_bound(1.0, x, 1.0, j)).sum::<f64>();
            let closed = f64::exp(x) - head;
            let tail = apriori_tail(1.0, x, 1.0, n);
            assert!(
                (tail - closed).abs() <= 1e-12 * f64::exp(x),
                "x={x} n={n}: {tail} vs {closed}"
            );
        }
        assert_eq!(apriori_tail(3.0, 0.0, 1.0, 1), 0.0);
    }

    #[test]
    fn zero_kernel_returns_forcing() {
        let ts = TimeScale::interval(0.0, 2.0).unwrap();
        let f = parse("sin(t) + 1").unwrap();
        let seed = zero_seed(&ts, 0.1);
        let (x, rep) = picard_solve(&ts, &f, &parse("0").unwrap(), &seed, &cfg(0.1, 0.0)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.residual, 0.0);
        assert_eq!(rep.stop_reason, StopReason::Converged);
        for (&t, &v) in x.grid().nodes().iter().zip(x.values()) {
            assert_eq!(v, t.sin() + 1.0);
        }
    }

    #[test]
    fn integer_scale_recurrence() {
        let ts = TimeScale::integers(0, 5).unwrap();
        let (x, rep) = picard_solve(
            &ts,
            &parse("1").unwrap(),
            &parse("x").unwrap(),
            &zero_seed(&ts, 1.0),
            &cfg(1.0, 1.0),
        )
        .unwrap();
        // oracle: x(t) = 1 + sum_{s<t} x(s)
        let mut oracle = [0.0f64; 6];
        for t in 0..6 {
            oracle[t] = 1.0 + oracle[..t].iter().sum::<f64>();
        }
        assert_eq!(x.values(), &oracle[..]);
        assert_eq!(x.at(5.0).unwrap(), 32.0);
        assert!(rep.residual <= 1e-12);
        assert!(rep.iterations <= 7);
    }

    #[test]
    fn real_interval_exponential() {
        let ts = TimeScale::interval(0.0, 1.0).unwrap();
        let (x, rep) = picard_solve(
            &ts,
            &parse("1").unwrap(),
            &parse("x").unwrap(),
            &zero_seed(&ts, 1e-3),
            &cfg(1e-3, 1.0),
        )
        .unwrap();
        assert!((x.at(1.0).unwrap() - 1f64.exp()).abs() <= 1e-5);
        // the factorial tail certifies 1e-10 one step before the deltas do
        assert_eq!(rep.stop_reason, StopReason::BoundTail);
        assert_eq!(rep.m, 1.0);
    }

    #[test]
    fn bound_tail_stop() {
        // a loose tolerance with tiny L: the tail certificate fires before deltas shrink
        let ts = TimeScale::interval(0.0, 1.0).unwrap();
        let c = SolveConfig {
            tol: 1e-3,
            max_iter: 50,
            step_h: 0.1,
            lipschitz_l: 1e-3,
        };
        let (_, rep) = picard_solve(
            &ts,
            &parse("100").unwrap(),
            &parse("x").unwrap(),
            &zero_seed(&ts, 0.1),
            &c,
        )
        .unwrap();
        assert_eq!(rep.stop_reason, StopReason::BoundTail);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn max_iter_stop() {
        let ts = TimeScale::interval(0.0, 1.0).unwrap();
        let c = SolveConfig {
            tol: 1e-14,
            max_iter: 3,
            step_h: 0.1,
            lipschitz_l: 1.0,
        };
        let (_, rep) = picard_solve(
            &ts,
            &parse("1").unwrap(),
            &parse("x").unwrap(),
            &zero_seed(&ts, 0.1),
            &c,
        )
        .unwrap();
        assert_eq!(rep.stop_reason, StopReason::MaxIter);
        assert_eq!(rep.deltas.len(), 3);
        assert_eq!(rep.apriori_bounds.len(), 3);
    }

    #[test]
    fn blow_up_is_an_error() {
        let ts = TimeScale::integers(0, 40).unwrap();
        let c = cfg(1.0, 1.0);
        let err = picard_solve(
            &ts,
            &parse("1").unwrap(),
            &parse("x^2 * 1e50").unwrap(),
            &zero_seed(&ts, 1.0),
            &c,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Domain(_) | Error::NonFiniteIterate { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn domain_error_propagates() {
        let ts = TimeScale::integers(0, 3).unwrap();
        let err = picard_solve(
            &ts,
            &parse("1").unwrap(),
            &parse("log(x)").unwrap(),
            &zero_seed(&ts, 1.0),
            &cfg(1.0, 1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn seed_on_wrong_grid() {
        let ts = TimeScale::interval(0.0, 1.0).unwrap();
        let seed = zero_seed(&ts, 0.5);
        let err = picard_solve(&ts, &parse("1").unwrap(), &parse("x").unwrap(), &seed, &cfg(0.1, 1.0)).unwrap_err();
        assert_eq!(err, Error::GridMismatch);
    }

    #[test]
    fn residual_examples() {
        let ts = TimeScale::integers(0, 5).unwrap();
        let g = Arc::new(ts.discretize(1.0).unwrap());
        let exact = GridFunction::from_fn(g.clone(), |t| 2f64.powf(t)).unwrap();
        assert!(residual(&ts, &parse("1").unwrap(), &parse("x").unwrap(), &exact, 1.0).unwrap() <= 1e-12);
        let f = parse("t*t").unwrap();
        let fx = GridFunction::sample(g.clone(), &f).unwrap();
        assert_eq!(residual(&ts, &f, &parse("0").unwrap(), &fx, 1.0).unwrap(), 0.0);
        let shifted = GridFunction::from_fn(g, |t| t * t + 1.0).unwrap();
        assert_eq!(residual(&ts, &f, &parse("0").unwrap(), &shifted, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn crosscheck_examples() {
        let ts = TimeScale::integers(0, 5).unwrap();
        let g = Arc::new(ts.discretize(1.0).unwrap());
        let a = GridFunction::constant(g.clone(), 0.0).unwrap();
        let b = GridFunction::constant(g, 10.0).unwrap();
        let (f, k) = (parse("1").unwrap(), parse("x").unwrap());
        assert!(uniqueness_crosscheck(&ts, &f, &k, &a, &b, &cfg(1.0, 1.0)).unwrap() <= 1e-9);
        assert_eq!(uniqueness_crosscheck(&ts, &f, &k, &a, &a, &cfg(1.0, 1.0)).unwrap(), 0.0);
        assert_eq!(
            uniqueness_crosscheck(&ts, &f, &parse("0").unwrap(), &a, &b, &cfg(1.0, 0.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn invalid_config() {
        let ts = TimeScale::integers(0, 2).unwrap();
        let seed = zero_seed(&ts, 1.0);
        for c in [
            SolveConfig {
                tol: 0.0,
                ..cfg(1.0, 1.0)
            },
            SolveConfig {
                max_iter: 0,
                ..cfg(1.0, 1.0)
            },
            SolveConfig {
                lipschitz_l: -1.0,
                ..cfg(1.0, 1.0)
            },
        ] {
            assert!(picard_solve(&ts, &parse("1").unwrap(), &parse("x").unwrap(), &seed, &c).is_err());
        }
    }
}
