use std::io::Write;
use std::path::{Path, PathBuf};

use tsvolterra_core::bracketing::default_verify_slack;
use tsvolterra_core::{
    apriori_bound, monotone_iterate, penalized_solve, picard_solve, verify_lower, verify_upper, BracketOptions,
    BracketPair, BracketReport, Error as CoreError, GridFunction, ModifiedKernelConfig, PenaltySign, SolveReport,
    StopReason,
};

use crate::output::{self, BracketJson, MonotoneJson, PenalizedJson, SolveJson, ViolationJson};
use crate::scenario::{PenaltyChoice, Problem, Scenario};
use crate::{exit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Solve,
    Bracket,
    Compare,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub strict_monotone: bool,
    /// Overrides the scenario's `penalty_sign`.
    pub penalty_sign: Option<PenaltyChoice>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("."),
            strict_monotone: false,
            penalty_sign: None,
        }
    }
}

/// Runs `cmd` and returns the exit code for a completed run: 0 on success,
/// 1 on a mathematical failure. Errors carry their own code, see
/// [`CliError::exit_code`].
pub fn run(cmd: Command, scenario: &Scenario, opts: &RunOptions, out: &mut dyn Write) -> Result<u8, CliError> {
    let problem = scenario.prepare()?;
    let mut ctx = Ctx {
        problem: &problem,
        opts,
        out,
    };
    match cmd {
        Command::Verify => ctx.verify(),
        Command::Solve => ctx.solve().map(|s| s.exit),
        Command::Bracket => ctx.bracket().map(|b| b.exit),
        Command::Compare => ctx.compare(),
    }
}

struct Ctx<'a> {
    problem: &'a Problem,
    opts: &'a RunOptions,
    out: &'a mut dyn Write,
}

struct Solved {
    x: GridFunction,
    report: SolveReport,
    exit: u8,
}

struct Bracketed {
    report: BracketReport,
    exit: u8,
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

macro_rules! say {
    ($ctx:expr, $($arg:tt)*) => {
        writeln!($ctx.out, $($arg)*).map_err(|source| CliError::Output { path: PathBuf::from("<stdout>"), source })?
    };
}

impl<'a> Ctx<'a> {
    fn name(&self) -> &'a str {
        let p: &'a Problem = self.problem;
        &p.scenario.name
    }

    fn out_path(&self, suffix: &str) -> Result<PathBuf, CliError> {
        let dir = &self.opts.out_dir;
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.clone(),
            source,
        })?;
        Ok(output::target(dir, self.name(), suffix))
    }

    fn wrote(&mut self, path: &Path) -> Result<(), CliError> {
        say!(self, "wrote {}", path.display());
        Ok(())
    }

    fn header(&mut self, cmd: &str) -> Result<(), CliError> {
        let p = self.problem;
        say!(self, "{cmd}: {}", self.name());
        say!(self, "  time scale  {}", p.ts);
        say!(self, "  nodes       {}", p.grid.len());
        say!(self, "  f = {}    k = {}", p.scenario.f, p.scenario.k);
        Ok(())
    }

    fn verify(&mut self) -> Result<u8, CliError> {
        let p = self.problem;
        let (v, w) = p.bracket_pair()?;
        let slack = default_verify_slack(&p.grid);
        self.header("verify")?;
        let lower = verify_lower(&p.ts, &p.f, &p.k, &v, p.cfg.step_h, slack)?;
        let upper = verify_upper(&p.ts, &p.f, &p.k, &w, p.cfg.step_h, slack)?;
        let (mut sector_defect, mut sector_node) = (f64::NEG_INFINITY, p.grid.a());
        for (i, &t) in p.grid.nodes().iter().enumerate() {
            let d = v.values()[i] - w.values()[i];
            if d > sector_defect {
                sector_defect = d;
                sector_node = t;
            }
        }
        let sector_ok = BracketPair::new(v, w).is_ok();
        say!(self, "  slack       {slack:e}");
        say!(
            self,
            "  {:<8} {:<6} {:>24} {:>24}",
            "check",
            "result",
            "worst defect",
            "at t"
        );
        for (label, ok, defect, node) in [
            ("lower", lower.ok, lower.worst_defect, lower.worst_node),
            ("upper", upper.ok, upper.worst_defect, upper.worst_node),
            ("v <= w", sector_ok, sector_defect, sector_node),
        ] {
            say!(
                self,
                "  {label:<8} {:<6} {:>24} {:>24}",
                ok_word(ok),
                output::float(defect),
                node
            );
        }
        let ok = lower.ok && upper.ok && sector_ok;
        Ok(if ok { exit::SUCCESS } else { exit::FAILURE })
    }

    fn solve(&mut self) -> Result<Solved, CliError> {
        let p = self.problem;
        let seed = p.seed();
        let (cfg, src) = p.solve_config(&seed)?;
        let (x, report) = picard_solve(&p.ts, &p.f, &p.k, &seed, &cfg)?;

        let csv_path = self.out_path("solution.csv")?;
        output::solution_csv(&csv_path, &x)?;
        let json_path = self.out_path("report.json")?;
        let seed_name = if p.v.is_some() { "v" } else { "zero" };
        output::json(
            &json_path,
            &SolveJson::new(self.name(), seed_name, cfg.step_h, cfg.tol, p.grid.len(), &report, src),
        )?;

        self.header("solve")?;
        say!(self, "  seed        {seed_name}");
        say!(self, "  L           {} ({})", report.lipschitz_l, src.as_str());
        say!(self, "  M           {}", report.m);
        say!(self, "  iterations  {}", report.iterations);
        say!(self, "  stop        {}", output::stop_name(report.stop_reason));
        say!(self, "  last delta  {:e}", report.deltas.last().copied().unwrap_or(0.0));
        say!(self, "  residual    {:e}", report.residual);
        say!(
            self,
            "  x({})  {}",
            p.grid.b(),
            output::float(*x.values().last().unwrap())
        );
        self.wrote(&csv_path)?;
        self.wrote(&json_path)?;

        let exit = if report.stop_reason == StopReason::MaxIter {
            say!(self, "no convergence within max_iter = {}", cfg.max_iter);
            exit::FAILURE
        } else {
            exit::SUCCESS
        };
        Ok(Solved { x, report, exit })
    }

    fn bracket(&mut self) -> Result<Bracketed, CliError> {
        let p = self.problem;
        let (v, w) = p.bracket_pair()?;
        let pair = BracketPair::new(v, w)?;
        let opts = BracketOptions {
            strict_monotone: self.opts.strict_monotone,
            verify_slack: None,
        };
        let n = p.scenario.n_bracket_iters;
        let report = monotone_iterate(&p.ts, &p.f, &p.k, &pair, n, p.cfg.step_h, opts)?;

        let sign = self.opts.penalty_sign.unwrap_or(p.scenario.penalty_sign);
        let penalized = self.penalized(&pair, sign.into(), sign.to_string())?;

        let csv_path = self.out_path("bracket.csv")?;
        output::bracket_csv(&csv_path, &report)?;
        let json_path = self.out_path("bracket.json")?;
        let doc = BracketJson {
            name: self.name(),
            n_iters: report.n_iters,
            gaps: &report.gaps,
            gap: report.gap,
            ordering_violations: report.ordering_violations.iter().map(ViolationJson::from).collect(),
            monotone_warning: report.monotone_warning.map(|m| MonotoneJson {
                t: m.t,
                s: m.s,
                x_lo: m.x_lo,
                x_hi: m.x_hi,
            }),
            penalized,
        };
        output::json(&json_path, &doc)?;

        self.header("bracket")?;
        if let Some(m) = report.monotone_warning {
            say!(
                self,
                "  warning: k decreases in x at t = {}, s = {} between x = {} and {}",
                m.t,
                m.s,
                m.x_lo,
                m.x_hi
            );
        }
        say!(self, "  {:>5} {:>24}", "level", "gap");
        for (l, g) in report.gaps.iter().enumerate() {
            say!(self, "  {l:>5} {:>24}", output::float(*g));
        }
        say!(self, "  ordering violations  {}", report.ordering_violations.len());
        for v in report.ordering_violations.iter().take(10) {
            say!(
                self,
                "    level {} t = {} by {:e} ({:?})",
                v.level,
                v.node,
                v.magnitude,
                v.kind
            );
        }
        match (&doc.penalized.error, doc.penalized.residual_original) {
            (Some(e), _) => say!(self, "  penalized ({})  {e}", doc.penalized.penalty_sign),
            (None, Some(r)) => say!(
                self,
                "  penalized ({})  in sector, residual against k {r:e}",
                doc.penalized.penalty_sign
            ),
            (None, None) => {}
        }
        self.wrote(&csv_path)?;
        self.wrote(&json_path)?;
        let exit = if report.ordering_violations.is_empty() {
            exit::SUCCESS
        } else {
            exit::FAILURE
        };
        Ok(Bracketed { report, exit })
    }

    fn penalized(&self, pair: &BracketPair, sign: PenaltySign, label: String) -> Result<PenalizedJson, CliError> {
        let p = self.problem;
        let (cfg, _) = p.solve_config(pair.v())?;
        let mk = ModifiedKernelConfig {
            penalty_sign: sign,
            ..Default::default()
        };
        let mut doc = PenalizedJson {
            penalty_sign: label,
            iterations: None,
            stop_reason: None,
            residual: None,
            residual_original: None,
            in_sector: false,
            error: None,
        };
        match penalized_solve(&p.ts, &p.f, &p.k, pair, &cfg, mk) {
            Ok((_, rep)) => {
                doc.iterations = Some(rep.solve.iterations);
                doc.stop_reason = Some(output::stop_name(rep.solve.stop_reason));
                doc.residual = Some(rep.solve.residual);
                doc.residual_original = Some(rep.residual_original);
                doc.in_sector = true;
            }
            Err(e @ (CoreError::SectorEscape { .. } | CoreError::NonFiniteIterate { .. } | CoreError::Domain(_))) => {
                doc.error = Some(e.to_string());
            }
            Err(e) => return Err(e.into()),
        }
        Ok(doc)
    }

    fn compare(&mut self) -> Result<u8, CliError> {
        let p = self.problem;
        p.bracket_pair()?;
        let solved = self.solve()?;
        let bracketed = self.bracket()?;
        let (x, rep, br) = (&solved.x, &solved.report, &bracketed.report);

        let slack = default_verify_slack(&p.grid);
        let span = p.grid.b() - p.grid.a();
        let d_alpha = x.sup_distance(&br.alpha)?;
        let d_beta = x.sup_distance(&br.beta)?;
        let allowed = 10.0 * p.cfg.tol + br.gap;

        say!(self, "compare: {}", self.name());
        say!(self, "  |x - alpha|  {:e}", d_alpha);
        say!(self, "  |x - beta|   {:e}", d_beta);
        say!(self, "  allowed      {:e} (10 tol + final gap)", allowed);
        say!(self, "  bound slack  {:e}", slack);
        say!(self, "  {:>5} {:>24} {:>24} {:>12}", "k", "delta", "bound", "ratio");
        let mut ratios_ok = true;
        for (i, &d) in rep.deltas.iter().enumerate() {
            let bound = apriori_bound(rep.m, rep.lipschitz_l, span, i + 1);
            let ratio = if d == 0.0 { 0.0 } else { d / (bound + slack) };
            let ok = ratio <= 1.0;
            ratios_ok &= ok;
            say!(
                self,
                "  {:>5} {:>24} {:>24} {:>12.6}{}",
                i + 1,
                output::float(d),
                output::float(bound),
                ratio,
                if ok { "" } else { "  > 1" }
            );
        }
        let distances_ok = d_alpha <= allowed && d_beta <= allowed;
        let converged = solved.exit == exit::SUCCESS;
        let ordered = bracketed.exit == exit::SUCCESS;
        say!(self, "  converged        {}", ok_word(converged));
        say!(self, "  chain ordered    {}", ok_word(ordered));
        say!(self, "  limits agree     {}", ok_word(distances_ok));
        say!(self, "  bound respected  {}", ok_word(ratios_ok));
        Ok(if converged && ordered && distances_ok && ratios_ok {
            exit::SUCCESS
        } else {
            exit::FAILURE
        })
    }
}
