use proptest::prelude::*;
use tsvolterra::{PenaltyChoice, Scenario};

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (
        "[a-z][a-z0-9_-]{0,12}",
        prop::collection::vec(-1e6f64..1e6, 1..5),
        "[-+*/^() 0-9.tsx]{1,20}",
        prop::option::of("[0-9t+*]{1,8}"),
        (1e-300f64..1.0, 1usize..100_000, 1e-9f64..10.0),
        prop::option::of(0.0f64..1e9),
        prop::bool::ANY,
        1usize..1000,
    )
        .prop_map(|(name, pts, k, v, (tol, max_iter, step_h), l, verbatim, n)| Scenario {
            name,
            timescale: format!("{{{}}}", pts.iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
            f: "1".into(),
            k,
            w: v.clone(),
            v,
            tol,
            max_iter,
            step_h,
            lipschitz_l: l,
            penalty_sign: if verbatim {
                PenaltyChoice::Verbatim
            } else {
                PenaltyChoice::Corrected
            },
            n_bracket_iters: n,
        })
}

proptest! {
    #[test]
    fn json_roundtrip_is_exact(s in arb_scenario()) {
        let text = s.to_json();
        let back = Scenario::from_json(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn arbitrary_json_never_panics(text in "\\PC{0,200}") {
        let _ = Scenario::from_json(&text);
    }

    #[test]
    fn prepare_never_panics(s in arb_scenario()) {
        if let Err(e) = s.prepare() {
            prop_assert_eq!(e.exit_code(), 2, "{}", e);
        }
    }
}
