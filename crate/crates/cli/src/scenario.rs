//! Scenario files and their validation into a solvable problem.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tsvolterra_core::dsl::estimate_lipschitz;
use tsvolterra_core::{parse, Component, Expr, Grid, GridFunction, PenaltySign, SolveConfig, TimeScale};

use crate::CliError;

/// Grids above this many nodes are rejected; every iteration is quadratic
/// in the node count.
pub const MAX_NODES: usize = 100_000;

const LIPSCHITZ_NODES: usize = 101;
const LIPSCHITZ_NX: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyChoice {
    #[default]
    Corrected,
    Verbatim,
}

impl From<PenaltyChoice> for PenaltySign {
    fn from(p: PenaltyChoice) -> Self {
        match p {
            PenaltyChoice::Corrected => PenaltySign::Corrected,
            PenaltyChoice::Verbatim => PenaltySign::Verbatim,
        }
    }
}

impl fmt::Display for PenaltyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyChoice::Corrected => "corrected",
            PenaltyChoice::Verbatim => "verbatim",
        })
    }
}

fn default_bracket_iters() -> usize {
    20
}

/// One problem instance as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub timescale: String,
    pub f: String,
    pub k: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub step_h: f64,
    #[serde(rename = "lipschitz_L", default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_l: Option<f64>,
    #[serde(default)]
    pub penalty_sign: PenaltyChoice,
    #[serde(default = "default_bracket_iters")]
    pub n_bracket_iters: usize,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadScenario {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| CliError::ScenarioJson {
            path: path.to_owned(),
            source,
        })
    }

    /// Parses and checks every field, then samples `v` and `w`.
    pub fn prepare(&self) -> Result<Problem, CliError> {
        self.check_name()?;
        let ts: TimeScale = self.timescale.parse().map_err(|source| CliError::TimeScale {
            text: self.timescale.clone(),
            source,
        })?;
        let f = expression("f", &self.f, true)?;
        let k = expression("k", &self.k, false)?;
        let v = self.v.as_deref().map(|t| expression("v", t, true)).transpose()?;
        let w = self.w.as_deref().map(|t| expression("w", t, true)).transpose()?;

        if !(self.step_h.is_finite() && self.step_h > 0.0) {
            return Err(CliError::Config(format!(
                "step_h must be finite and > 0, got {}",
                self.step_h
            )));
        }
        let estimate = node_estimate(&ts, self.step_h);
        if estimate > MAX_NODES as f64 {
            return Err(CliError::Config(format!(
                "step_h = {} gives about {estimate:.0} nodes; the limit is {MAX_NODES}",
                self.step_h
            )));
        }
        if let Some(l) = self.lipschitz_l {
            if !(l.is_finite() && l >= 0.0) {
                return Err(CliError::Config(format!(
                    "lipschitz_L must be finite and >= 0, got {l}"
                )));
            }
        }
        if self.n_bracket_iters < 1 {
            return Err(CliError::Config("n_bracket_iters must be >= 1".into()));
        }
        let cfg = SolveConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            step_h: self.step_h,
            lipschitz_l: self.lipschitz_l.unwrap_or(0.0),
        };
        cfg.validate()?;

        let grid = Arc::new(ts.discretize(self.step_h)?);
        let sample = |field: &'static str, e: &Expr| {
            GridFunction::sample(grid.clone(), e).map_err(|source| CliError::Sample { field, source })
        };
        let f_values = sample("f", &f)?;
        let v = v.as_ref().map(|e| sample("v", e)).transpose()?;
        let w = w.as_ref().map(|e| sample("w", e)).transpose()?;

        Ok(Problem {
            scenario: self.clone(),
            ts,
            grid,
            f,
            k,
            f_values,
            v,
            w,
            cfg,
        })
    }

    fn check_name(&self) -> Result<(), CliError> {
        let ok = !self.name.is_empty()
            && !self.name.starts_with('.')
            && self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "name `{}` must be non-empty ASCII letters, digits, `-`, `_` or `.`, not starting with `.`",
                self.name
            )))
        }
    }
}

fn expression(field: &'static str, text: &str, t_only: bool) -> Result<Expr, CliError> {
    let e = parse(text).map_err(|source| CliError::Expression {
        field,
        text: text.to_owned(),
        source,
    })?;
    if t_only && (e.uses_s() || e.uses_x()) {
        return Err(CliError::Config(format!("{field} = `{text}` may only depend on t")));
    }
    Ok(e)
}

fn node_estimate(ts: &TimeScale, h: f64) -> f64 {
    ts.components()
        .iter()
        .map(|c| match *c {
            Component::Interval { lo, hi } => (hi - lo) / h + 1.0,
            Component::Point(_) => 1.0,
        })
        .sum()
}

/// Where the Lipschitz constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LipschitzSource {
    Given,
    Estimated,
}

impl LipschitzSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LipschitzSource::Given => "given",
            LipschitzSource::Estimated => "estimated",
        }
    }
}

/// A validated scenario with its grid and sampled functions.
#[derive(Debug, Clone)]
pub struct Problem {
    pub scenario: Scenario,
    pub ts: TimeScale,
    pub grid: Arc<Grid>,
    pub f: Expr,
    pub k: Expr,
    pub f_values: GridFunction,
    pub v: Option<GridFunction>,
    pub w: Option<GridFunction>,
    pub cfg: SolveConfig,
}

impl Problem {
    /// `v` when given, otherwise zero.
    pub fn seed(&self) -> GridFunction {
        self.v
            .clone()
            .unwrap_or_else(|| GridFunction::constant(self.grid.clone(), 0.0).expect("zero is finite"))
    }

    pub fn bracket_pair(&self) -> Result<(GridFunction, GridFunction), CliError> {
        match (&self.v, &self.w) {
            (Some(v), Some(w)) => Ok((v.clone(), w.clone())),
            _ => Err(CliError::Config(
                "this command needs both v and w in the scenario".into(),
            )),
        }
    }

    /// Solver settings with `L` resolved: the scenario's value, or a sampled
    /// estimate over the range of `f`, the seed and the bracket, widened by
    /// 10% (at least 1) on each side.
    pub fn solve_config(&self, seed: &GridFunction) -> Result<(SolveConfig, LipschitzSource), CliError> {
        if let Some(l) = self.scenario.lipschitz_l {
            return Ok((
                SolveConfig {
                    lipschitz_l: l,
                    ..self.cfg
                },
                LipschitzSource::Given,
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let all = [Some(&self.f_values), Some(seed), self.v.as_ref(), self.w.as_ref()];
        for g in all.into_iter().flatten() {
            for &y in g.values() {
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        let pad = (0.1 * (hi - lo)).max(1.0);
        let est = estimate_lipschitz(
            &self.k,
            &self.grid.thinned(LIPSCHITZ_NODES),
            lo - pad,
            hi + pad,
            LIPSCHITZ_NX,
        )
        .map_err(|source| CliError::Lipschitz { source })?;
        log::info!(
            "estimated L = {} from {} samples over x in [{}, {}]",
            est.l,
            est.sample_count,
            est.x_range.0,
            est.x_range.1
        );
        Ok((
            SolveConfig {
                lipschitz_l: est.l,
                ..self.cfg
            },
            LipschitzSource::Estimated,
        ))
    }
}
