//! Scalar objectives: the common system payoff (the game's potential), the individual
//! one-shot payoffs with and without a sharing reward, discounted repeated-game values
//! and the uniform stage-payoff bound.
//!
//! All logarithms are base 2, so leakage terms and rate terms are both in bits.

use crate::error::{Agent, Error, Result};
use crate::grid;
use crate::model::{leakage, DerivedConstants};

/// `a1` is the distortion agent 1 imposes on agent 2 (`D2`), `a2` the one agent 2
/// imposes on agent 1 (`D1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionProfile {
    pub a1: f64,
    pub a2: f64,
}

impl ActionProfile {
    pub fn new(a1: f64, a2: f64) -> Self {
        ActionProfile { a1, a2 }
    }

    pub fn action(&self, j: Agent) -> f64 {
        match j {
            Agent::One => self.a1,
            Agent::Two => self.a2,
        }
    }

    pub fn with_action(mut self, j: Agent, value: f64) -> Self {
        match j {
            Agent::One => self.a1 = value,
            Agent::Two => self.a2 = value,
        }
        self
    }

    /// The no-sharing profile `(dbar_2, dbar_1)`.
    pub fn no_sharing(c: &DerivedConstants) -> Self {
        ActionProfile::new(c.dbar[1], c.dbar[0])
    }

    /// The full-disclosure profile `(d_min,2, d_min,1)`.
    pub fn full_disclosure(c: &DerivedConstants) -> Self {
        ActionProfile::new(c.d_min[1], c.d_min[0])
    }

    pub fn in_range(&self, c: &DerivedConstants) -> bool {
        Agent::BOTH.iter().all(|&j| {
            let (lo, hi) = c.action_range(j);
            let a = self.action(j);
            a >= lo && a <= hi
        })
    }

    pub fn max_abs_diff(&self, other: &ActionProfile) -> f64 {
        (self.a1 - other.a1).abs().max((self.a2 - other.a2).abs())
    }
}

fn log2_checked(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x.log2())
    } else {
        Err(Error::DomainError(format!("{what} = {x}")))
    }
}

/// `gamma_j a_j + delta_j`, evaluated as `d_min,j + gamma_j (a_j - d_min,i)` so that large
/// `gamma_j` does not cancel against `delta_j`.
pub fn affine_term(c: &DerivedConstants, j: Agent, a_j: f64) -> f64 {
    c.d_min(j) + c.gamma(j) * (a_j - c.d_min(j.other()))
}

/// System payoff in the product form
/// `1/2 log((gamma1 a1 + delta1)(gamma2 a2 + delta2) / (a1 + a2)^q) + C0`,
/// with `C0 = q/2 log(dbar1 + dbar2)`.
pub fn system_payoff(c: &DerivedConstants, a: &ActionProfile, q: f64) -> Result<f64> {
    let p1 = log2_checked(affine_term(c, Agent::One, a.a1), "gamma1*a1 + delta1")?;
    let p2 = log2_checked(affine_term(c, Agent::Two, a.a2), "gamma2*a2 + delta2")?;
    let s = log2_checked(a.a1 + a.a2, "a1 + a2")?;
    let c0 = 0.5 * q * (c.dbar[0] + c.dbar[1]).log2();
    Ok(0.5 * (p1 + p2 - q * s) + c0)
}

/// System payoff in the weighted-sum form `-L1(a1) - L2(a2) + q/2 log(sum dbar / sum a)`.
pub fn system_payoff_weighted_sum(c: &DerivedConstants, a: &ActionProfile, q: f64) -> Result<f64> {
    let l1 = leakage(c, Agent::One, a.a1)?;
    let l2 = leakage(c, Agent::Two, a.a2)?;
    let ratio = log2_checked((c.dbar[0] + c.dbar[1]) / (a.a1 + a.a2), "sum dbar / sum a")?;
    Ok(-l1 - l2 + 0.5 * q * ratio)
}

/// One-shot payoff of agent `j`: `-L_j(a_j) + q_j/2 log(dbar_j / a_i)`.
pub fn individual_payoff(
    c: &DerivedConstants,
    j: Agent,
    a_j: f64,
    a_i: f64,
    q_j: f64,
) -> Result<f64> {
    let l = leakage(c, j, a_j)?;
    let fidelity = log2_checked(c.dbar(j) / a_i, "dbar_j / a_i")?;
    Ok(-l + 0.5 * q_j * fidelity)
}

/// Individual payoff plus the sharing reward `p_j/2 log(dbar_i / a_j)`.
pub fn priced_payoff(
    c: &DerivedConstants,
    j: Agent,
    a_j: f64,
    a_i: f64,
    q_j: f64,
    p_j: f64,
) -> Result<f64> {
    let base = individual_payoff(c, j, a_j, a_i, q_j)?;
    let reward = log2_checked(c.dbar(j.other()) / a_j, "dbar_i / a_j")?;
    Ok(base + 0.5 * p_j * reward)
}

/// Grid argmax of the priced payoff over the own action; ties go to the larger action.
pub fn priced_argmax(
    c: &DerivedConstants,
    j: Agent,
    a_i: f64,
    q_j: f64,
    p_j: f64,
    grid_size: usize,
) -> Result<f64> {
    let (lo, hi) = c.action_range(j);
    let mut best = (f64::NEG_INFINITY, lo);
    for a in grid::linspace(lo, hi, grid_size) {
        let u = priced_payoff(c, j, a, a_i, q_j, p_j)?;
        if u >= best.0 {
            best = (u, a);
        }
    }
    Ok(best.1)
}

/// Smallest price (to `tol`) at which the grid argmax of the priced payoff of agent `j`
/// reaches `target` or below. The argmax is non-increasing in the price, so bisection
/// applies. Returns `None` if no price up to `max_price` moves it that far.
///
/// This is a search tool over the pricing mechanism, not a closed-form price rule.
pub fn price_for_action(
    c: &DerivedConstants,
    j: Agent,
    target: f64,
    a_i: f64,
    q_j: f64,
    grid_size: usize,
    tol: f64,
) -> Result<Option<f64>> {
    const MAX_PRICE: f64 = 1e6;
    let reached =
        |p: f64| -> Result<bool> { Ok(priced_argmax(c, j, a_i, q_j, p, grid_size)? <= target) };
    if reached(0.0)? {
        return Ok(Some(0.0));
    }
    let mut hi = 1.0;
    while !reached(hi)? {
        hi *= 2.0;
        if hi > MAX_PRICE {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if reached(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Per-stage payoffs from stage 1 on, optionally followed by a constant infinite tail.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StagePayoffSeq {
    pub stages: Vec<f64>,
    pub constant_tail: Option<f64>,
}

impl StagePayoffSeq {
    pub fn finite(stages: Vec<f64>) -> Self {
        StagePayoffSeq {
            stages,
            constant_tail: None,
        }
    }

    pub fn with_tail(stages: Vec<f64>, tail: f64) -> Self {
        StagePayoffSeq {
            stages,
            constant_tail: Some(tail),
        }
    }
}

/// Normalised discounted value `(1 - rho) sum_t rho^(t-1) u_t`. A constant tail after the
/// listed stages contributes `rho^T * tail` in closed form.
pub fn discounted_value(seq: &StagePayoffSeq, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidParameter {
            field: "rho",
            reason: format!("discount factor must lie in (0, 1), got {rho}"),
        });
    }
    if seq.stages.is_empty() && seq.constant_tail.is_none() {
        return Err(Error::InvalidParameter {
            field: "stages",
            reason: "empty payoff sequence".into(),
        });
    }
    let mut weight = 1.0;
    let mut sum = 0.0;
    for &u in &seq.stages {
        sum += weight * u;
        weight *= rho;
    }
    let tail = seq.constant_tail.map_or(0.0, |u| weight * u);
    Ok((1.0 - rho) * sum + tail)
}

/// Uniform bound `(1 + q_j)/2 log(1/d_min,j)` on `|u_j|` over the action rectangle.
pub fn payoff_bound(c: &DerivedConstants, j: Agent, q_j: f64) -> Result<f64> {
    let d = c.d_min(j);
    if !(d > 0.0) {
        return Err(Error::DegenerateDistortion { agent: j });
    }
    Ok((1.0 + q_j) * 0.5 * (1.0 / d).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{min_leakage, SystemParams, TargetRule};
    use crate::scenarios;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_profile(c: &DerivedConstants, rng: &mut impl Rng) -> ActionProfile {
        let (l1, h1) = c.action_range(Agent::One);
        let (l2, h2) = c.action_range(Agent::Two);
        ActionProfile::new(rng.random_range(l1..=h1), rng.random_range(l2..=h2))
    }

    #[test]
    fn two_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..1000 {
            let c = if k % 2 == 0 {
                scenarios::random_params(&mut rng).derive().unwrap()
            } else {
                scenarios::three_ne().derive().unwrap()
            };
            let a = random_profile(&c, &mut rng);
            let q = rng.random_range(0.0..10.0);
            let prod = system_payoff(&c, &a, q).unwrap();
            let sum = system_payoff_weighted_sum(&c, &a, q).unwrap();
            assert!(
                (prod - sum).abs() <= 1e-12 * (1.0 + prod.abs()),
                "{prod} vs {sum}"
            );
        }
    }

    #[test]
    fn unilateral_differences_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let c = scenarios::random_params(&mut rng).derive().unwrap();
            let a = random_profile(&c, &mut rng);
            let b = random_profile(&c, &mut rng);
            let q = rng.random_range(0.0..10.0);
            for j in Agent::BOTH {
                let moved = a.with_action(j, b.action(j));
                let d_prod =
                    system_payoff(&c, &moved, q).unwrap() - system_payoff(&c, &a, q).unwrap();
                let d_sum = system_payoff_weighted_sum(&c, &moved, q).unwrap()
                    - system_payoff_weighted_sum(&c, &a, q).unwrap();
                assert!((d_prod - d_sum).abs() < 1e-12, "{d_prod} vs {d_sum}");
            }
        }
    }

    #[test]
    fn zero_weight_is_pure_leakage() {
        let c = scenarios::three_ne().derive().unwrap();
        let a = ActionProfile::new(0.3, 0.2);
        let u = system_payoff(&c, &a, 0.0).unwrap();
        let l = leakage(&c, Agent::One, a.a1).unwrap() + leakage(&c, Agent::Two, a.a2).unwrap();
        assert!((u + l).abs() < 1e-12);
        let top = system_payoff(&c, &ActionProfile::no_sharing(&c), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = random_profile(&c, &mut rng);
            assert!(system_payoff(&c, &p, 0.0).unwrap() <= top + 1e-15);
        }
    }

    #[test]
    fn three_ne_potential_shape() {
        let c = scenarios::three_ne().derive().unwrap();
        let q = 1.2;
        let u = |a1: f64, a2: f64| system_payoff(&c, &ActionProfile::new(a1, a2), q).unwrap();
        let h = 1e-4;

        // saddle: some neighbours above, some below
        let (s1, s2) = (0.2031, 0.1906);
        let centre = u(s1, s2);
        let around: Vec<f64> = [(h, h), (-h, -h), (h, -h), (-h, h)]
            .iter()
            .map(|(d1, d2)| u(s1 + d1, s2 + d2))
            .collect();
        assert!(around.iter().any(|&v| v > centre));
        assert!(around.iter().any(|&v| v < centre));

        // corners: local maxima over their in-range neighbourhoods
        let lo = ActionProfile::full_disclosure(&c);
        let hi = ActionProfile::no_sharing(&c);
        for (d1, d2) in [(h, 0.0), (0.0, h), (h, h)] {
            assert!(u(lo.a1 + d1, lo.a2 + d2) < u(lo.a1, lo.a2));
            assert!(u(hi.a1 - d1, hi.a2 - d2) < u(hi.a1, hi.a2));
        }
    }

    #[test]
    fn individual_payoff_identities() {
        let c = scenarios::agreement_scenario().derive().unwrap();
        for j in Agent::BOTH {
            let i = j.other();
            let a_j = c.d_min(i) + 0.3 * (c.dbar(i) - c.d_min(i));
            let u = individual_payoff(&c, j, a_j, c.dbar(j), 5.0).unwrap();
            assert!((u + leakage(&c, j, a_j).unwrap()).abs() < 1e-15);

            let ns = individual_payoff(&c, j, c.dbar(i), c.dbar(j), 5.0).unwrap();
            assert!((ns + leakage(&c, j, c.dbar(i)).unwrap()).abs() < 1e-15);
        }
        // with Max targets the no-sharing payoff is minus the leakage floor
        let cm = scenarios::agreement_scenario()
            .with_target(TargetRule::Max)
            .derive()
            .unwrap();
        for j in Agent::BOTH {
            let ns = individual_payoff(&cm, j, cm.dbar(j.other()), cm.dbar(j), 5.0).unwrap();
            assert!((ns + min_leakage(&cm, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn own_action_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let c = scenarios::random_params(&mut rng).derive().unwrap();
            let q = rng.random_range(0.0..10.0);
            for j in Agent::BOTH {
                let (lo_i, hi_i) = c.action_range(j.other());
                let a_i = rng.random_range(lo_i..=hi_i);
                let (lo, hi) = c.action_range(j);
                let pts = grid::linspace(lo, hi, 200);
                let us: Vec<f64> = pts
                    .iter()
                    .map(|&a| individual_payoff(&c, j, a, a_i, q).unwrap())
                    .collect();
                for w in us.windows(2) {
                    assert!(w[1] > w[0]);
                }
                let best = pts[us.len() - 1];
                assert_eq!(best, c.dbar(j.other()));
            }
        }
    }

    #[test]
    fn pricing_reward_terms() {
        let c = scenarios::agreement_scenario().derive().unwrap();
        let j = Agent::One;
        let (lo, hi) = c.action_range(j);
        let a_i = c.dbar[0];
        for a in grid::linspace(lo, hi, 7) {
            let base = individual_payoff(&c, j, a, a_i, 5.0).unwrap();
            assert_eq!(priced_payoff(&c, j, a, a_i, 5.0, 0.0).unwrap(), base);
        }
        let at_top = priced_payoff(&c, j, hi, a_i, 5.0, 3.0).unwrap();
        assert!((at_top - individual_payoff(&c, j, hi, a_i, 5.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn price_search_matches_stationary_point() {
        // d/da [1/2 log(gamma a + delta) + p/2 log(1/a)] = 0  =>  p = gamma a / (gamma a + delta)
        let c = scenarios::agreement_scenario().derive().unwrap();
        let j = Agent::One;
        assert!(c.delta(j) < 0.0);
        let (lo, hi) = c.action_range(j);
        let target = lo + 0.5 * (hi - lo);
        let grid_size = 4001;
        let p = price_for_action(&c, j, target, c.dbar[0], 5.0, grid_size, 1e-9)
            .unwrap()
            .unwrap();
        let exact = c.gamma(j) * target / (c.gamma(j) * target + c.delta(j));
        // one grid step of slack in the action translates into a small price band
        let step = (hi - lo) / (grid_size - 1) as f64;
        let p_lo = c.gamma(j) * (target + step) / (c.gamma(j) * (target + step) + c.delta(j));
        assert!(
            p <= exact + 1e-6 && p >= p_lo - 1e-6,
            "{p} vs [{p_lo}, {exact}]"
        );
        let moved = priced_argmax(&c, j, c.dbar[0], 5.0, p, grid_size).unwrap();
        assert!((moved - target).abs() <= step);
    }

    #[test]
    fn discounted_constant_sequences() {
        let u = -1.7;
        let rho = 0.8;
        let t = 12;
        let v = discounted_value(&StagePayoffSeq::finite(vec![u; t]), rho).unwrap();
        assert!((v - (1.0 - rho.powi(t as i32)) * u).abs() < 1e-14);
        let inf = discounted_value(&StagePayoffSeq::with_tail(vec![], u), rho).unwrap();
        assert_eq!(inf, u);
        let split = discounted_value(&StagePayoffSeq::with_tail(vec![u; 5], u), rho).unwrap();
        assert!((split - u).abs() < 1e-14);
        assert!(discounted_value(&StagePayoffSeq::finite(vec![1.0]), 1.0).is_err());
        assert!(discounted_value(&StagePayoffSeq::default(), 0.5).is_err());
    }

    #[test]
    fn payoff_bound_values() {
        let c = SystemParams::symmetric_noise(0.9, 0.5, 0.1)
            .derive()
            .unwrap();
        let b = payoff_bound(&c, Agent::Two, 5.0).unwrap();
        assert!((b - 3.0 * (1.0 / c.d_min[1]).log2()).abs() < 1e-12);
        assert!((b - 6.587).abs() < 1e-3);
        let b0 = payoff_bound(&c, Agent::One, 0.0).unwrap();
        assert!((b0 - 0.5 * (1.0 / c.d_min[0]).log2()).abs() < 1e-15);

        let mut bad = c;
        bad.d_min[0] = 0.0;
        assert!(matches!(
            payoff_bound(&bad, Agent::One, 1.0),
            Err(Error::DegenerateDistortion { agent: Agent::One })
        ));
    }

    #[test]
    fn payoff_bound_holds_on_grid() {
        let c = SystemParams::symmetric_noise(0.9, 0.5, 0.1)
            .derive()
            .unwrap();
        let q = 5.0;
        for j in Agent::BOTH {
            let bound = payoff_bound(&c, j, q).unwrap();
            let (lo_j, hi_j) = c.action_range(j);
            let (lo_i, hi_i) = c.action_range(j.other());
            let mut worst: f64 = 0.0;
            for a_j in grid::linspace(lo_j, hi_j, 500) {
                for a_i in grid::linspace(lo_i, hi_i, 500) {
                    worst = worst.max(individual_payoff(&c, j, a_j, a_i, q).unwrap().abs());
                }
            }
            assert!(worst <= bound, "{worst} > {bound}");
        }
    }

    #[test]
    fn payoff_bound_holds_randomly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = scenarios::random_params(&mut rng).derive().unwrap();
        for _ in 0..100_000 {
            let j = if rng.random_bool(0.5) {
                Agent::One
            } else {
                Agent::Two
            };
            let q = rng.random_range(0.0..20.0);
            let (lo_j, hi_j) = c.action_range(j);
            let (lo_i, hi_i) = c.action_range(j.other());
            let u = individual_payoff(
                &c,
                j,
                rng.random_range(lo_j..=hi_j),
                rng.random_range(lo_i..=hi_i),
                q,
            )
            .unwrap();
            assert!(u.abs() <= payoff_bound(&c, j, q).unwrap());
        }
    }
}
