//! Scenario-driven front end for `tsvolterra-core`.
//!
//! A scenario file describes one equation `x(t) = f(t) + ∫ₐᵗ k(t,s,x(s)) Δs`
//! on a time scale, optionally with lower and upper solutions `v`, `w`.
//! [`run`] executes one of the four commands against it, writes CSV/JSON
//! results into an output directory and prints a summary.

mod commands;
mod output;
pub mod scenario;

use std::path::PathBuf;

use thiserror::Error;
use tsvolterra_core::{Error as CoreError, ParseError};

pub use commands::{run, Command, RunOptions};
pub use scenario::{LipschitzSource, PenaltyChoice, Problem, Scenario};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    /// Non-convergence, failed verification, ordering violations, domain errors.
    pub const FAILURE: u8 = 1;
    /// Malformed scenario, bad arguments, unwritable output.
    pub const USAGE: u8 = 2;
}

/// Expression grammar accepted for `f`, `k`, `v` and `w`.
pub const GRAMMAR: &str = r#"expr    = term { ("+" | "-") term } ;
term    = unary { ("*" | "/") unary } ;
unary   = "-" unary | power ;
power   = primary [ "^" unary ] ;             (* right associative *)
primary = number | var | call | "(" expr ")" ;
var     = "t" | "s" | "x" ;
call    = fn1 "(" expr ")" | fn2 "(" expr "," expr ")" ;
fn1     = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" ;
fn2     = "min" | "max" ;
number  = digit { digit } [ "." { digit } ] [ exponent ]
        | "." digit { digit } [ exponent ] ;
exponent = ("e" | "E") [ "+" | "-" ] digit { digit } ;"#;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read scenario {}: {source}", path.display())]
    ReadScenario { path: PathBuf, source: std::io::Error },

    #[error("malformed scenario {}: {source}", path.display())]
    ScenarioJson { path: PathBuf, source: serde_json::Error },

    #[error("{field}: {source}\n{}", caret(text, source.offset()))]
    Expression {
        field: &'static str,
        text: String,
        source: ParseError,
    },

    #[error("timescale: {source}{}", timescale_caret(text, source))]
    TimeScale { text: String, source: CoreError },

    #[error("cannot sample {field}: {source}")]
    Sample { field: &'static str, source: CoreError },

    #[error("cannot estimate lipschitz_L ({source}); set it in the scenario")]
    Lipschitz { source: CoreError },

    #[error("invalid scenario: {0}")]
    Config(String),

    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lipschitz { .. } => exit::FAILURE,
            CliError::Core(e) => match e {
                CoreError::InvalidConfig(_)
                | CoreError::InvalidStep { .. }
                | CoreError::InvalidTimeScale(_)
                | CoreError::TimeScaleSyntax { .. }
                | CoreError::Parse(_) => exit::USAGE,
                _ => exit::FAILURE,
            },
            _ => exit::USAGE,
        }
    }
}

fn caret(text: &str, offset: usize) -> String {
    let col = text.get(..offset).map_or(offset, |s| s.chars().count());
    format!("  {text}\n  {}^", " ".repeat(col))
}

fn timescale_caret(text: &str, e: &CoreError) -> String {
    match e {
        CoreError::TimeScaleSyntax { offset, .. } => format!("\n{}", caret(text, *offset)),
        _ => String::new(),
    }
}
