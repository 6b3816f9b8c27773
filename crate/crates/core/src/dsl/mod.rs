//! Scalar expressions in `t`, `s` and `x` used for kernels `k(t,s,x)`,
//! forcing terms `f(t)` and candidate lower/upper solutions.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;             (* right associative *)
//! primary = number | var | call | "(" expr ")" ;
//! var     = "t" | "s" | "x" ;
//! call    = fn1 "(" expr ")" | fn2 "(" expr "," expr ")" ;
//! fn1     = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" ;
//! fn2     = "min" | "max" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ]
//!         | "." digit { digit } [ exponent ] ;
//! ```

mod parse;
mod sampling;

use std::fmt;

use thiserror::Error;

pub use parse::{parse, ParseError};
pub use sampling::{check_monotone_in_x, estimate_lipschitz, LipschitzEstimate, MonotoneWitness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    S,
    X,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::S => "s",
            Var::X => "x",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Evaluation left the real domain of an operation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error: {what} (t = {t}, s = {s}, x = {x})")]
pub struct EvalError {
    pub what: String,
    pub t: f64,
    pub s: f64,
    pub x: f64,
}

impl Expr {
    pub fn eval(&self, t: f64, s: f64, x: f64) -> Result<f64, EvalError> {
        let fail = |what: String| EvalError { what, t, s, x };
        let v = self.eval_inner(t, s, x).map_err(fail)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(format!("`{self}` evaluates to {v}")))
        }
    }

    fn eval_inner(&self, t: f64, s: f64, x: f64) -> Result<f64, String> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::S) => s,
            Expr::Var(Var::X) => x,
            Expr::Neg(e) => -e.eval_inner(t, s, x)?,
            Expr::Binary(op, l, r) => {
                let a = l.eval_inner(t, s, x)?;
                let b = r.eval_inner(t, s, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(format!("division by zero in `{self}`"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(format!("0 raised to negative power {b}"));
                        }
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(format!("negative base {a} raised to non-integer power {b}"));
                        }
                        a.powf(b)
                    }
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].eval_inner(t, s, x)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(format!("log of nonpositive {a}"));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(format!("sqrt of negative {a}"));
                        }
                        a.sqrt()
                    }
                    Func::Min => a.min(args[1].eval_inner(t, s, x)?),
                    Func::Max => a.max(args[1].eval_inner(t, s, x)?),
                }
            }
        })
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) => e.uses(var),
            Expr::Binary(_, l, r) => l.uses(var) || r.uses(var),
            Expr::Call(_, args) => args.iter().any(|a| a.uses(var)),
        }
    }

    pub fn uses_s(&self) -> bool {
        self.uses(Var::S)
    }

    pub fn uses_x(&self) -> bool {
        self.uses(Var::X)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse(s)
    }
}

/// Prints a fully parenthesized form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 is the shortest round-trip decimal, never exponent form
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{})", -v),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(text: &str, t: f64, s: f64, x: f64) -> f64 {
        parse(text).unwrap().eval(t, s, x).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ev("x", 0.0, 0.0, 3.0), 3.0);
        assert_eq!(ev("exp(t)", 0.0, 9.0, 9.0), 1.0);
        assert_eq!(ev("sin(x)+t*s", 2.0, 3.0, 0.0), 6.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0, 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(ev("max(t, min(s, x))", 1.0, 5.0, 3.0), 3.0);
        assert_eq!(ev("(-2)^3", 0.0, 0.0, 0.0), -8.0);
    }

    #[test]
    fn domain_errors() {
        for text in [
            "log(x)",
            "log(-1)",
            "sqrt(-x-1)",
            "1/x",
            "x^(-1)",
            "(-2)^0.5",
            "exp(1000)",
        ] {
            assert!(parse(text).unwrap().eval(0.0, 0.0, 0.0).is_err(), "{text}");
        }
    }

    #[test]
    fn display_reparses() {
        for text in ["1 + t*s", "-x^2", "2^3^2", "min(t, -s) / (1 - x)", "exp(-t) * 1.5e-3"] {
            let e = parse(text).unwrap();
            let back = parse(&e.to_string()).unwrap();
            assert_eq!(back, e, "{text} -> {e}");
        }
    }

    #[test]
    fn variable_usage() {
        let e = parse("t + sin(x)").unwrap();
        assert!(e.uses(Var::T) && e.uses_x() && !e.uses_s());
    }
}
