//! CSV and JSON result files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tsvolterra_core::{BracketReport, GridFunction, OrderingViolation, SolveReport, StopReason, ViolationKind};

use crate::scenario::LipschitzSource;
use crate::CliError;

/// 17 significant digits: parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Output {
        path: path.to_owned(),
        source: e.into(),
    }
}

fn write_csv(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let mut out = csv::Writer::from_path(path).map_err(csv_err(path))?;
    out.write_record(&header).map_err(csv_err(path))?;
    for row in rows {
        out.write_record(row.into_iter().map(float)).map_err(csv_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// `t,x`
pub fn solution_csv(path: &Path, x: &GridFunction) -> Result<(), CliError> {
    let nodes = x.grid().nodes();
    write_csv(
        path,
        vec!["t".into(), "x".into()],
        nodes.iter().zip(x.values()).map(|(&t, &v)| vec![t, v]),
    )
}

/// `t, v0 … vn, wn … w0, alpha, beta`
pub fn bracket_csv(path: &Path, rep: &BracketReport) -> Result<(), CliError> {
    let n = rep.n_iters;
    let mut header = vec!["t".to_string()];
    header.extend((0..=n).map(|l| format!("v{l}")));
    header.extend((0..=n).rev().map(|l| format!("w{l}")));
    header.extend(["alpha".to_string(), "beta".to_string()]);
    let nodes = rep.alpha.grid().nodes();
    let rows = (0..nodes.len()).map(|i| {
        let mut row = vec![nodes[i]];
        row.extend(rep.v_chain.iter().map(|v| v.values()[i]));
        row.extend(rep.w_chain.iter().rev().map(|w| w.values()[i]));
        row.extend([rep.alpha.values()[i], rep.beta.values()[i]]);
        row
    });
    write_csv(path, header, rows)
}

pub fn json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Output {
        path: path.to_owned(),
        source: e.into(),
    })?;
    out.write_all(b"\n").map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn target(dir: &Path, name: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{name}.{suffix}"))
}

pub fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Converged => "Converged",
        StopReason::BoundTail => "BoundTail",
        StopReason::MaxIter => "MaxIter",
    }
}

/// `<name>.report.json`
#[derive(Debug, Serialize)]
pub struct SolveJson<'a> {
    pub name: &'a str,
    pub seed: &'static str,
    pub nodes: usize,
    pub tol: f64,
    pub step_h: f64,
    pub iterations: usize,
    pub deltas: &'a [f64],
    pub apriori_bounds: &'a [f64],
    pub residual: f64,
    pub stop_reason: &'static str,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "L_source")]
    pub l_source: LipschitzSource,
    #[serde(rename = "M")]
    pub m: f64,
}

impl<'a> SolveJson<'a> {
    pub fn new(
        name: &'a str,
        seed: &'static str,
        step_h: f64,
        tol: f64,
        nodes: usize,
        rep: &'a SolveReport,
        src: LipschitzSource,
    ) -> Self {
        SolveJson {
            name,
            seed,
            nodes,
            tol,
            step_h,
            iterations: rep.iterations,
            deltas: &rep.deltas,
            apriori_bounds: &rep.apriori_bounds,
            residual: rep.residual,
            stop_reason: stop_name(rep.stop_reason),
            l: rep.lipschitz_l,
            l_source: src,
            m: rep.m,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ViolationJson {
    pub level: usize,
    pub t: f64,
    pub magnitude: f64,
    pub kind: &'static str,
}

impl From<&OrderingViolation> for ViolationJson {
    fn from(v: &OrderingViolation) -> Self {
        ViolationJson {
            level: v.level,
            t: v.node,
            magnitude: v.magnitude,
            kind: match v.kind {
                ViolationKind::LowerDecreased => "lower_decreased",
                ViolationKind::UpperIncreased => "upper_increased",
                ViolationKind::Crossed => "crossed",
            },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MonotoneJson {
    pub t: f64,
    pub s: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

/// Penalized solve inside the sector, reported alongside the chains.
#[derive(Debug, Serialize)]
pub struct PenalizedJson {
    pub penalty_sign: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_reason: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_original: Option<f64>,
    pub in_sector: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `<name>.bracket.json`
#[derive(Debug, Serialize)]
pub struct BracketJson<'a> {
    pub name: &'a str,
    pub n_iters: usize,
    pub gaps: &'a [f64],
    pub gap: f64,
    pub ordering_violations: Vec<ViolationJson>,
    pub monotone_warning: Option<MonotoneJson>,
    pub penalized: PenalizedJson,
}
