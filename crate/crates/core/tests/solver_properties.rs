mod common;

use common::{grid, mixed_scale, point_scale};
use proptest::prelude::*;
use tsvolterra_core::solver::quadrature_tol;
use tsvolterra_core::{apriori_bound, parse, picard_solve, GridFunction, SolveConfig, StopReason, TimeScale};

fn cfg(step_h: f64, l: f64) -> SolveConfig {
    SolveConfig {
        tol: 1e-10,
        max_iter: 500,
        step_h,
        lipschitz_l: l,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn deltas_respect_apriori_bound(ts in mixed_scale(), a in -1.5f64..1.5, b in -1.0f64..1.0, h in 0.05f64..0.2) {
        // |∂k/∂x| ≤ |a| everywhere
        let k = parse(&format!("{a} * sin(x) + {b} * t * s")).unwrap();
        let f = parse("cos(t)").unwrap();
        let g = grid(&ts, h);
        let seed = GridFunction::constant(g.clone(), 0.0).unwrap();
        let (_, rep) = picard_solve(&ts, &f, &k, &seed, &cfg(h, a.abs())).unwrap();
        prop_assert_ne!(rep.stop_reason, StopReason::MaxIter);
        prop_assert_eq!(rep.deltas.len(), rep.iterations);
        prop_assert!(rep.residual >= 0.0);
        let slack = 10.0 * quadrature_tol(&g);
        let span = ts.b() - ts.a();
        for (i, &d) in rep.deltas.iter().enumerate() {
            let bound = apriori_bound(rep.m, a.abs(), span, i + 1);
            prop_assert!(d <= bound + slack + 1e-15, "iteration {}: {} > {}", i + 1, d, bound);
            prop_assert!((rep.apriori_bounds[i] - bound).abs() <= 1e-12 * bound);
        }
    }

    #[test]
    fn contractive_deltas_nonincreasing(lo in -2.0f64..2.0, len in 0.2f64..1.0, frac in 0.1f64..0.9, h in 0.01f64..0.1) {
        // L·(b−a) = frac < 1
        let ts = TimeScale::interval(lo, lo + len).unwrap();
        let l = frac / len;
        let k = parse(&format!("{l} * sin(x + t) - s")).unwrap();
        let f = parse("t^2").unwrap();
        let seed = GridFunction::constant(grid(&ts, h), 1.0).unwrap();
        let (_, rep) = picard_solve(&ts, &f, &k, &seed, &cfg(h, l)).unwrap();
        for w in rep.deltas.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{:?}", rep.deltas);
        }
    }

    #[test]
    fn discrete_scales_reach_the_fixed_point(ts in point_scale(), c in -0.9f64..0.9) {
        let g = grid(&ts, 1.0);
        let k = parse(&format!("{c} * sin(x) + t - s")).unwrap();
        let f = parse("1 + t").unwrap();
        let seed = GridFunction::constant(g.clone(), 0.0).unwrap();
        let mut config = cfg(1.0, c.abs());
        config.tol = 1e-13;
        let (_, rep) = picard_solve(&ts, &f, &k, &seed, &config).unwrap();
        prop_assert!(rep.iterations <= g.len(), "{} iterations on {} nodes", rep.iterations, g.len());
        prop_assert!(rep.residual <= 1e-12);
    }
}

fn real_error(h: f64) -> f64 {
    let ts = TimeScale::interval(0.0, 1.0).unwrap();
    let seed = GridFunction::constant(grid(&ts, h), 0.0).unwrap();
    let (x, _) = picard_solve(&ts, &parse("1").unwrap(), &parse("x").unwrap(), &seed, &cfg(h, 1.0)).unwrap();
    (x.at(1.0).unwrap() - std::f64::consts::E).abs()
}

#[test]
fn halving_h_is_second_order() {
    for h in [0.05, 0.02, 0.01, 0.004] {
        let ratio = real_error(h) / real_error(h / 2.0);
        assert!(ratio >= 3.5, "h = {h}: ratio {ratio}");
    }
}

#[test]
fn identical_across_thread_counts() {
    let ts: TimeScale = "[0,1];{1.5,2};[2.5,3]".parse().unwrap();
    let h = 0.01;
    let f = parse("cos(3*t)").unwrap();
    let k = parse("0.7 * sin(x) * exp(-(t - s)) + s / 4").unwrap();
    let seed = GridFunction::constant(grid(&ts, h), 0.5).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| picard_solve(&ts, &f, &k, &seed, &cfg(h, 0.7)).unwrap())
    };
    let (x1, r1) = run(1);
    for threads in [2, 4, 7] {
        let (xn, rn) = run(threads);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(x1.values()), bits(xn.values()), "{threads} threads");
        assert_eq!(bits(&r1.deltas), bits(&rn.deltas));
        assert_eq!(r1.residual.to_bits(), rn.residual.to_bits());
    }
}
