//! Bounded time scales `[a, b] ∩ T` stored as an ordered union of closed
//! intervals and isolated points, plus the jump operators and the
//! discretization used by the quadrature layer.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Absolute tolerance for membership and node lookups.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// One connected piece of a time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    Interval { lo: f64, hi: f64 },
    Point(f64),
}

impl Component {
    pub fn lo(&self) -> f64 {
        match *self {
            Component::Interval { lo, .. } => lo,
            Component::Point(t) => t,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Component::Interval { hi, .. } => hi,
            Component::Point(t) => t,
        }
    }

    fn contains(&self, t: f64) -> bool {
        self.lo() - MEMBERSHIP_TOL <= t && t <= self.hi() + MEMBERSHIP_TOL
    }
}

/// Left/right density of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointClass {
    pub right_dense: bool,
    pub right_scattered: bool,
    pub left_dense: bool,
    pub left_scattered: bool,
}

/// A nonempty, bounded, closed subset of the reals with finitely many components.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    components: Vec<Component>,
}

impl TimeScale {
    /// Builds a time scale from components listed left to right.
    ///
    /// Degenerate intervals `[c, c]` are stored as points. Components must be
    /// sorted, finite and separated by strictly positive gaps.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidTimeScale("no components".into()));
        }
        let mut out = Vec::with_capacity(components.len());
        for c in components {
            let c = match c {
                Component::Interval { lo, hi } if lo == hi => Component::Point(lo),
                other => other,
            };
            if !c.lo().is_finite() || !c.hi().is_finite() {
                return Err(Error::InvalidTimeScale(format!("non-finite bound in {c:?}")));
            }
            if c.lo() > c.hi() {
                return Err(Error::InvalidTimeScale(format!(
                    "interval [{}, {}] has lo > hi",
                    c.lo(),
                    c.hi()
                )));
            }
            if let Some(prev) = out.last() {
                let prev: &Component = prev;
                if c.lo() <= prev.hi() + MEMBERSHIP_TOL {
                    return Err(Error::InvalidTimeScale(format!(
                        "component starting at {} overlaps or precedes the one ending at {}",
                        c.lo(),
                        prev.hi()
                    )));
                }
            }
            out.push(c);
        }
        Ok(TimeScale { components: out })
    }

    /// The real interval `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![Component::Interval { lo, hi }])
    }

    /// The integer slice `{lo, lo+1, ..., hi}`.
    pub fn integers(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidTimeScale(format!("empty integer range {lo}..={hi}")));
        }
        Self::new((lo..=hi).map(|n| Component::Point(n as f64)).collect())
    }

    /// Isolated points, which must be strictly increasing.
    pub fn points(ts: &[f64]) -> Result<Self> {
        Self::new(ts.iter().map(|&t| Component::Point(t)).collect())
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn a(&self) -> f64 {
        self.components[0].lo()
    }

    pub fn b(&self) -> f64 {
        self.components[self.components.len() - 1].hi()
    }

    /// Index of the component holding `t`.
    fn locate(&self, t: f64) -> Result<usize> {
        if !t.is_finite() {
            return Err(Error::PointNotInTimeScale { t });
        }
        let idx = self.components.partition_point(|c| c.hi() + MEMBERSHIP_TOL < t);
        match self.components.get(idx) {
            Some(c) if c.contains(t) => Ok(idx),
            _ => Err(Error::PointNotInTimeScale { t }),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_ok()
    }

    /// Forward jump `σ(t) = inf{s ∈ T : s > t}`, with `σ(b) = b`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let idx = self.locate(t)?;
        if let Component::Interval { hi, .. } = self.components[idx] {
            if t < hi - MEMBERSHIP_TOL {
                return Ok(t);
            }
        }
        Ok(match self.components.get(idx + 1) {
            Some(next) => next.lo(),
            None => self.b(),
        })
    }

    /// Backward jump `ρ(t) = sup{s ∈ T : s < t}`, with `ρ(a) = a`.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let idx = self.locate(t)?;
        if let Component::Interval { lo, .. } = self.components[idx] {
            if t > lo + MEMBERSHIP_TOL {
                return Ok(t);
            }
        }
        Ok(match idx.checked_sub(1) {
            Some(prev) => self.components[prev].hi(),
            None => self.a(),
        })
    }

    /// Graininess `μ(t) = σ(t) − t`.
    pub fn graininess(&self, t: f64) -> Result<f64> {
        let s = self.sigma(t)?;
        Ok((s - t).max(0.0))
    }

    pub fn classify(&self, t: f64) -> Result<PointClass> {
        let right_scattered = self.sigma(t)? > t + MEMBERSHIP_TOL;
        let left_scattered = self.rho(t)? < t - MEMBERSHIP_TOL;
        Ok(PointClass {
            right_dense: !right_scattered,
            right_scattered,
            left_dense: !left_scattered,
            left_scattered,
        })
    }

    /// Samples the time scale: every point and interval endpoint becomes a
    /// node, and each interval `[lo, hi]` gets `ceil((hi − lo)/step_h) + 1`
    /// uniform nodes.
    pub fn discretize(&self, step_h: f64) -> Result<Grid> {
        if !(step_h.is_finite() && step_h > 0.0) {
            return Err(Error::InvalidStep { h: step_h });
        }
        let mut nodes = Vec::new();
        let mut jumps = Vec::new();
        for c in &self.components {
            if !nodes.is_empty() {
                jumps.push(true);
            }
            match *c {
                Component::Point(t) => nodes.push(t),
                Component::Interval { lo, hi } => {
                    let n = interval_segments(lo, hi, step_h);
                    let dx = (hi - lo) / n as f64;
                    nodes.push(lo);
                    for i in 1..n {
                        nodes.push(lo + i as f64 * dx);
                        jumps.push(false);
                    }
                    nodes.push(hi);
                    jumps.push(false);
                }
            }
        }
        Ok(Grid { nodes, jumps, step_h })
    }
}

/// Number of sub-intervals for `[lo, hi]`. The ratio is nudged down by a few
/// ulps so that e.g. `1.0 / 1e-3` does not round up to 1001 segments.
fn interval_segments(lo: f64, hi: f64, step_h: f64) -> usize {
    let ratio = (hi - lo) / step_h;
    let n = (ratio * (1.0 - 4.0 * f64::EPSILON)).ceil();
    (n as usize).max(1)
}

impl fmt::Display for TimeScale {
    /// Writes the literal form, grouping consecutive points into one set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.components.len() {
            if !first {
                f.write_str(";")?;
            }
            first = false;
            match self.components[i] {
                Component::Interval { lo, hi } => {
                    write!(f, "[{lo},{hi}]")?;
                    i += 1;
                }
                Component::Point(_) => {
                    f.write_str("{")?;
                    let mut sep = "";
                    while let Some(Component::Point(t)) = self.components.get(i) {
                        write!(f, "{sep}{t}")?;
                        sep = ",";
                        i += 1;
                    }
                    f.write_str("}")?;
                }
            }
        }
        Ok(())
    }
}

impl FromStr for TimeScale {
    type Err = Error;

    /// Parses literals such as `[0,1];{2};[3,4]` or `{0,1,2,3}`.
    fn from_str(s: &str) -> Result<Self> {
        LiteralParser { src: s, pos: 0 }.parse()
    }
}

struct LiteralParser<'a> {
    src: &'a str,
    pos: usize,
}

impl LiteralParser<'_> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::TimeScaleSyntax {
            offset,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => self.err(self.pos, format!("expected `{want}`, found `{c}`")),
            None => self.err(self.pos, format!("expected `{want}`, found end of input")),
        }
    }

    fn number(&mut self) -> Result<(usize, f64)> {
        self.skip_ws();
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(self.src.len() - start);
        let text = &self.src[start..start + len];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos += len;
                Ok((start, v))
            }
            _ if text.is_empty() => self.err(start, "expected a number"),
            _ => self.err(start, format!("invalid number `{text}`")),
        }
    }

    fn parse(mut self) -> Result<TimeScale> {
        let mut components: Vec<(usize, Component)> = Vec::new();
        loop {
            let start = {
                self.skip_ws();
                self.pos
            };
            match self.peek() {
                Some('[') => {
                    self.pos += 1;
                    let (_, lo) = self.number()?;
                    self.expect(',')?;
                    let (hi_at, hi) = self.number()?;
                    self.expect(']')?;
                    if lo > hi {
                        return self.err(hi_at, format!("interval upper bound {hi} < lower bound {lo}"));
                    }
                    components.push((start, Component::Interval { lo, hi }));
                }
                Some('{') => {
                    self.pos += 1;
                    loop {
                        let (at, t) = self.number()?;
                        components.push((at, Component::Point(t)));
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            Some('}') => {
                                self.pos += 1;
                                break;
                            }
                            Some(c) => return self.err(self.pos, format!("expected `,` or `}}`, found `{c}`")),
                            None => return self.err(self.pos, "expected `,` or `}`, found end of input"),
                        }
                    }
                }
                Some(c) => return self.err(self.pos, format!("expected `[` or `{{`, found `{c}`")),
                None => return self.err(self.pos, "expected `[` or `{`, found end of input"),
            }
            match self.peek() {
                Some(';') => self.pos += 1,
                None => break,
                Some(c) => return self.err(self.pos, format!("expected `;` or end of input, found `{c}`")),
            }
        }
        for pair in components.windows(2) {
            let (_, prev) = pair[0];
            let (at, next) = pair[1];
            if next.lo() <= prev.hi() + MEMBERSHIP_TOL {
                return self.err(
                    at,
                    format!("component at {} overlaps or precedes {}", next.lo(), prev.hi()),
                );
            }
        }
        TimeScale::new(components.into_iter().map(|(_, c)| c).collect())
    }
}

/// Discretization nodes of a time scale.
///
/// `jumps[i]` tells whether the segment from node `i` to node `i + 1` crosses
/// a gap of the time scale (node `i` is right-scattered) or stays inside one
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    jumps: Vec<bool>,
    step_h: f64,
}

impl Grid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step_h(&self) -> f64 {
        self.step_h
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Whether segment `i` (node `i` to `i + 1`) is a jump between components.
    pub fn is_jump(&self, segment: usize) -> bool {
        self.jumps[segment]
    }

    /// True when some segment lies inside an interval component.
    pub fn has_dense_part(&self) -> bool {
        self.jumps.iter().any(|&j| !j)
    }

    /// Graininess at node `i`: the jump length for right-scattered nodes,
    /// zero otherwise.
    pub fn mu(&self, i: usize) -> f64 {
        match self.jumps.get(i) {
            Some(true) => self.nodes[i + 1] - self.nodes[i],
            _ => 0.0,
        }
    }

    /// Position of `t` among the nodes, within [`MEMBERSHIP_TOL`].
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let idx = self.nodes.partition_point(|&n| n < t - MEMBERSHIP_TOL);
        self.nodes
            .get(idx)
            .filter(|&&n| (n - t).abs() <= MEMBERSHIP_TOL)
            .map(|_| idx)
    }

    pub fn require_index(&self, t: f64) -> Result<usize> {
        self.index_of(t).ok_or(Error::NodeNotOnGrid { t })
    }

    /// A subset of at most `max_nodes` nodes (first and last always kept),
    /// for sampling-based diagnostics that are quadratic in the node count.
    pub fn thinned(&self, max_nodes: usize) -> Grid {
        let n = self.nodes.len();
        if n <= max_nodes.max(2) {
            return self.clone();
        }
        let stride = n.div_ceil(max_nodes.max(2) - 1);
        let mut keep: Vec<usize> = (0..n).step_by(stride).collect();
        if *keep.last().unwrap() != n - 1 {
            keep.push(n - 1);
        }
        let nodes = keep.iter().map(|&i| self.nodes[i]).collect();
        let jumps = keep
            .windows(2)
            .map(|w| self.jumps[w[0]..w[1]].iter().any(|&j| j))
            .collect();
        Grid {
            nodes,
            jumps,
            step_h: self.step_h * stride as f64,
        }
    }
}
