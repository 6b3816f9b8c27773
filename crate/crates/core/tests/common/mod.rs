#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use tsvolterra_core::{Component, Grid, GridFunction, TimeScale};

/// Random bounded time scales mixing intervals and isolated points.
pub fn mixed_scale() -> impl Strategy<Value = TimeScale> {
    let piece = prop_oneof![(0.05f64..2.0).prop_map(|len| (true, len)), Just((false, 0.0)),];
    (-5.0f64..5.0, prop::collection::vec((piece, 0.05f64..1.5), 1..7)).prop_map(|(start, parts)| {
        let mut at = start;
        let mut comps = Vec::new();
        for ((is_interval, len), gap) in parts {
            if is_interval {
                comps.push(Component::Interval { lo: at, hi: at + len });
                at += len;
            } else {
                comps.push(Component::Point(at));
            }
            at += gap;
        }
        TimeScale::new(comps).unwrap()
    })
}

/// Purely discrete scales with irregular spacing.
pub fn point_scale() -> impl Strategy<Value = TimeScale> {
    (-3.0f64..3.0, prop::collection::vec(0.05f64..2.0, 1..12)).prop_map(|(start, gaps)| {
        let mut pts = vec![start];
        for g in gaps {
            pts.push(pts.last().unwrap() + g);
        }
        TimeScale::points(&pts).unwrap()
    })
}

pub fn grid(ts: &TimeScale, h: f64) -> Arc<Grid> {
    Arc::new(ts.discretize(h).unwrap())
}

/// Nondecreasing samples: cumulative sums of nonnegative increments.
pub fn nondecreasing(grid: Arc<Grid>, start: f64, increments: &[f64]) -> GridFunction {
    let mut acc = start;
    let values = (0..grid.len())
        .map(|i| {
            if i > 0 {
                acc += increments[i % increments.len()];
            }
            acc
        })
        .collect();
    GridFunction::new(grid, values).unwrap()
}
