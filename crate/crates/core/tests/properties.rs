use compriv::model::{leakage, SystemParams};
use compriv::payoffs::{
    individual_payoff, payoff_bound, system_payoff, system_payoff_weighted_sum,
};
use compriv::potential_game::{best_response, enumerate_equilibria, fixed_point_residual};
use compriv::repeated_game::{analyze_agreement, min_discount};
use compriv::{ActionProfile, Agent, DerivedConstants};
use proptest::prelude::*;

fn scenario() -> impl Strategy<Value = DerivedConstants> {
    (-1.0f64..1.0, -1.0f64..1.0, -2.0f64..0.0, -2.0f64..0.0).prop_filter_map(
        "degenerate",
        |(a1, a2, s1, s2)| {
            SystemParams::new(
                10f64.powf(a1),
                10f64.powf(a2),
                10f64.powf(s1),
                10f64.powf(s2),
            )
            .derive()
            .ok()
        },
    )
}

fn in_range(c: &DerivedConstants, u: f64, v: f64) -> ActionProfile {
    let (lo1, hi1) = c.action_range(Agent::One);
    let (lo2, hi2) = c.action_range(Agent::Two);
    ActionProfile::new(lo1 + u * (hi1 - lo1), lo2 + v * (hi2 - lo2))
}

proptest! {
    #[test]
    fn payoff_forms_agree(c in scenario(), u in 0.0f64..=1.0, v in 0.0f64..=1.0, q in 0.0f64..10.0) {
        let a = in_range(&c, u, v);
        let x = system_payoff(&c, &a, q).unwrap();
        let y = system_payoff_weighted_sum(&c, &a, q).unwrap();
        prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
    }

    #[test]
    fn leakage_decreases_with_distortion(c in scenario(), u in 0.0f64..1.0, w in 0.0f64..1.0) {
        for i in Agent::BOTH {
            let j = i.other();
            let lo = c.d_min(j);
            let (d, e) = (lo + u.min(w) * (1.0 - lo), lo + u.max(w) * (1.0 - lo));
            prop_assert!(leakage(&c, i, d).unwrap() >= leakage(&c, i, e).unwrap() - 1e-12);
        }
    }

    #[test]
    fn best_response_stays_in_range(c in scenario(), u in 0.0f64..=1.0, q in 0.0f64..10.0) {
        for j in Agent::BOTH {
            let (lo_i, hi_i) = c.action_range(j.other());
            let br = best_response(&c, j, lo_i + u * (hi_i - lo_i), q).unwrap();
            let (lo, hi) = c.action_range(j);
            prop_assert!(br >= lo && br <= hi);
        }
    }

    #[test]
    fn equilibria_are_fixed_points(c in scenario(), q in 0.0f64..10.0) {
        let set = enumerate_equilibria(&c, q).unwrap();
        prop_assert!(!set.is_empty());
        for e in &set.points {
            prop_assert!(fixed_point_residual(&c, &e.profile, q).unwrap() < 1e-9);
        }
    }

    #[test]
    fn individual_payoffs_are_bounded(c in scenario(), u in 0.0f64..=1.0, v in 0.0f64..=1.0, q in 0.0f64..10.0) {
        let a = in_range(&c, u, v);
        for j in Agent::BOTH {
            let p = individual_payoff(&c, j, a.action(j), a.action(j.other()), q).unwrap();
            prop_assert!(p.abs() <= payoff_bound(&c, j, q).unwrap());
        }
    }

    #[test]
    fn sustainability_is_consistent(c in scenario(), u in 0.0f64..1.0, v in 0.0f64..1.0, q1 in 0.1f64..10.0, q2 in 0.1f64..10.0) {
        let a = ActionProfile::new(
            c.d_min[1] + u * (c.dbar[1] - c.d_min[1]),
            c.d_min[0] + v * (c.dbar[0] - c.d_min[0]),
        );
        let an = analyze_agreement(&c, [q1, q2], a).unwrap();
        prop_assert_eq!(an.sustainable, an.is_rational() && an.rho_min[0] < 1.0 && an.rho_min[1] < 1.0);
        prop_assert!(an.rho_min[0] > 0.0 && an.rho_min[1] > 0.0);
        // scaling both weights by k divides the bounds by k
        let scaled = min_discount(&c, Agent::One, &a, 2.0 * q1).unwrap();
        prop_assert!((scaled - an.rho_min[0] / 2.0).abs() <= 1e-12 * an.rho_min[0].abs().max(1.0));
    }
}
