//! Reference scenarios and a random-scenario sampler for property checks.

use rand::Rng;

use crate::model::{SystemParams, TargetRule};

/// `alpha = (0.5, 0.6)`, `sigma^2 = 0.1`, maximal targets: a single stable interior
/// equilibrium for large fidelity weights.
pub fn unique_ne() -> SystemParams {
    SystemParams::symmetric_noise(0.5, 0.6, 0.1).with_target(TargetRule::Max)
}

/// Weight used with [`unique_ne`]; it reproduces the interior point `(0.2559, 0.2542)`.
pub const UNIQUE_NE_Q: f64 = 5.0;

/// `alpha = (1, 10)`, `sigma^2 = 0.1`, maximal targets: three equilibria at `q = 1.2`.
pub fn three_ne() -> SystemParams {
    SystemParams::symmetric_noise(1.0, 10.0, 0.1).with_target(TargetRule::Max)
}

pub const THREE_NE_Q: f64 = 1.2;

/// `alpha = (0.9, 0.5)`, `sigma^2 = 0.1`, midpoint targets: the repeated-game scenario.
pub fn agreement_scenario() -> SystemParams {
    SystemParams::symmetric_noise(0.9, 0.5, 0.1).with_target(TargetRule::Fraction { t: 0.5 })
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

/// Scenario with `alpha` log-uniform on `[0.1, 10]` and `sigma^2` log-uniform on
/// `[0.01, 1]`, midpoint targets. Draws that hit a degenerate estimator are redrawn.
pub fn random_params(rng: &mut impl Rng) -> SystemParams {
    loop {
        let p = SystemParams::new(
            log_uniform(rng, 0.1, 10.0),
            log_uniform(rng, 0.1, 10.0),
            log_uniform(rng, 0.01, 1.0),
            log_uniform(rng, 0.01, 1.0),
        );
        if p.derive().is_ok() {
            return p;
        }
    }
}
