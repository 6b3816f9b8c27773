#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use tsvolterra::{PenaltyChoice, Scenario};

/// `{0,1,…,n}`
pub fn integers(n: usize) -> String {
    let pts: Vec<String> = (0..=n).map(|i| i.to_string()).collect();
    format!("{{{}}}", pts.join(","))
}

/// f = 1, k = x on {0,…,5}, bracketed by 0 and 2^(t+1).
pub fn z_scenario() -> Scenario {
    Scenario {
        name: "z".into(),
        timescale: integers(5),
        f: "1".into(),
        k: "x".into(),
        v: Some("0".into()),
        w: Some("2^(t+1)".into()),
        tol: 1e-10,
        max_iter: 200,
        step_h: 1.0,
        lipschitz_l: None,
        penalty_sign: PenaltyChoice::Corrected,
        n_bracket_iters: 8,
    }
}

/// f = 1, k = x on [0,1], bracketed by 0 and 4 + 4t.
pub fn r_scenario() -> Scenario {
    Scenario {
        name: "r".into(),
        timescale: "[0,1]".into(),
        f: "1".into(),
        k: "x".into(),
        v: Some("0".into()),
        w: Some("4+4*t".into()),
        tol: 1e-10,
        max_iter: 200,
        step_h: 1e-3,
        lipschitz_l: None,
        penalty_sign: PenaltyChoice::Corrected,
        n_bracket_iters: 20,
    }
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl From<Output> for Run {
    fn from(o: Output) -> Self {
        Run {
            code: o.status.code().expect("exited normally"),
            stdout: String::from_utf8_lossy(&o.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }
    }
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsvolterra"))
}

pub fn run_file(cmd: &str, scenario: &Path, out_dir: &Path, extra: &[&str]) -> Run {
    bin()
        .arg(cmd)
        .arg("--scenario")
        .arg(scenario)
        .arg("--out-dir")
        .arg(out_dir)
        .args(extra)
        .output()
        .expect("binary runs")
        .into()
}

/// Writes `scenario` into a fresh directory and runs `cmd` there.
pub fn run(cmd: &str, scenario: &Scenario, extra: &[&str]) -> (Run, TempDir) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, scenario.to_json()).unwrap();
    let r = run_file(cmd, &path, dir.path(), extra);
    (r, dir)
}

pub fn run_text(cmd: &str, text: &str) -> Run {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, text).unwrap();
    run_file(cmd, &path, dir.path(), &[])
}

/// Rows of a CSV file with a header, parsed as floats.
pub fn read_csv(path: PathBuf) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

pub fn read_json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

/// Malformed or invalid scenario files; each must exit 2.
pub fn malformed_corpus() -> Vec<(&'static str, String)> {
    let base = serde_json::to_value(z_scenario()).unwrap();
    let with = |key: &str, value: serde_json::Value| {
        let mut v = base.clone();
        v[key] = value;
        v.to_string()
    };
    let without = |key: &str| {
        let mut v = base.clone();
        v.as_object_mut().unwrap().remove(key);
        v.to_string()
    };
    vec![
        ("empty file", String::new()),
        ("not json", "name = z".into()),
        ("truncated", base.to_string()[..20].to_string()),
        ("array", "[1,2]".into()),
        ("unknown field", with("seed", "0".into())),
        ("missing k", without("k")),
        ("missing timescale", without("timescale")),
        ("k dangling operator", with("k", "x +".into())),
        ("k unbalanced", with("k", "(x * (t + 1)".into())),
        ("k unknown function", with("k", "tan(x)".into())),
        ("k unknown variable", with("k", "x + y".into())),
        ("k wrong arity", with("k", "min(x)".into())),
        ("k trailing token", with("k", "x 2".into())),
        ("k empty", with("k", "".into())),
        (
            "k deep nesting",
            with("k", format!("{}x{}", "(".repeat(5000), ")".repeat(5000)).into()),
        ),
        ("f uses x", with("f", "x".into())),
        ("v uses s", with("v", "s".into())),
        ("w garbage", with("w", "2^^t".into())),
        ("k non-ascii", with("k", "x × 2".into())),
        ("timescale reversed", with("timescale", "[1,0]".into())),
        ("timescale overlap", with("timescale", "[0,2];[1,3]".into())),
        ("timescale garbage", with("timescale", "0..5".into())),
        ("timescale empty", with("timescale", "".into())),
        ("tol zero", with("tol", 0.0.into())),
        ("tol negative", with("tol", (-1.0).into())),
        ("tol string", with("tol", "small".into())),
        ("max_iter zero", with("max_iter", 0.into())),
        ("max_iter negative", with("max_iter", (-3).into())),
        ("max_iter fractional", with("max_iter", 2.5.into())),
        ("step_h zero", with("step_h", 0.0.into())),
        (
            "step_h tiny",
            r#"{"name":"z","timescale":"[0,1]","f":"1","k":"x","tol":1e-8,"max_iter":1,"step_h":1e-300}"#.into(),
        ),
        ("lipschitz negative", with("lipschitz_L", (-1.0).into())),
        ("penalty sign", with("penalty_sign", "sideways".into())),
        ("n_bracket_iters zero", with("n_bracket_iters", 0.into())),
        ("name with slash", with("name", "../escape".into())),
        ("name empty", with("name", "".into())),
        (
            "huge number",
            r#"{"name":"z","timescale":"[0,1]","f":"1","k":"x","tol":1e999,"max_iter":1,"step_h":0.1}"#.into(),
        ),
    ]
}
