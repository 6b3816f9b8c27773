use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsvolterra::{run, Command, PenaltyChoice, RunOptions, Scenario, GRAMMAR};

/// Solve Volterra integral equations x(t) = f(t) + ∫ₐᵗ k(t,s,x(s)) Δs on time scales.
#[derive(Debug, Parser)]
#[command(name = "tsvolterra", version, after_long_help = help_grammar())]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check that v is a lower solution, w an upper solution and v <= w.
    Verify(RunArgs),
    /// Successive approximations from v (or zero); writes <name>.solution.csv and <name>.report.json.
    Solve(RunArgs),
    /// Monotone iteration from v and w; writes <name>.bracket.csv and <name>.bracket.json.
    Bracket(RunArgs),
    /// Solve and bracket, then compare the solution with both limits and the a-priori bounds.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for CSV/JSON output.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Fail instead of warning when k is seen decreasing in x.
    #[arg(long)]
    strict_monotone: bool,
    /// Penalty above the upper solution in the modified kernel.
    #[arg(long, value_enum)]
    penalty_sign: Option<PenaltyChoice>,
}

fn help_grammar() -> String {
    format!("Expression grammar for f, k, v, w (EBNF):\n\n{GRAMMAR}")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Bracket(a) => (Command::Bracket, a),
        Cmd::Compare(a) => (Command::Compare, a),
    };
    let opts = RunOptions {
        out_dir: args.out_dir,
        strict_monotone: args.strict_monotone,
        penalty_sign: args.penalty_sign,
    };
    let result = Scenario::load(&args.scenario).and_then(|s| run(cmd, &s, &opts, &mut std::io::stdout().lock()));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;
    use tsvolterra::exit;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_2() {
        let err = Cli::try_parse_from(["tsvolterra", "solve"]).unwrap_err();
        assert_eq!(err.exit_code(), exit::USAGE as i32);
        let err = Cli::try_parse_from(["tsvolterra", "solve", "--scenario", "a", "--penalty-sign", "up"]).unwrap_err();
        assert_eq!(err.exit_code(), exit::USAGE as i32);
    }
}
