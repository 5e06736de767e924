//! Decentralized data sharing as a discounted repeated game.
//!
//! The one-shot game is dominance solvable (sharing less is always better for the
//! sharer), so with a known horizon nothing beyond the minimum is ever shared. With a
//! statistical horizon, grim-trigger play of an individually rational agreement
//! `(D2*, D1*)` is subgame perfect as soon as each discount factor exceeds
//!
//! ```text
//! rho_j > 2 [L_j(D_i*) - L_j(dbar_i)] / (q_j log(dbar_j / D_j*))
//! ```
//!
//! which is also the maximum over deviant actions of the one-stage deviation ratio.
//! Agreements are [`ActionProfile`]s: `a1 = D2*` is agent 1's sharing level and
//! `a2 = D1*` agent 2's.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::error::{Agent, Error, Result};
use crate::grid;
use crate::model::{leakage_nats, DerivedConstants, SystemParams, TargetRule};
use crate::payoffs::{discounted_value, individual_payoff, ActionProfile, StagePayoffSeq};

/// Size of the deviant-action sweep used by [`verify_spe`].
pub const DEVIATION_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// The end stage is common knowledge.
    Known(usize),
    /// The game continues after each stage with probability `rho`.
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatedConfig {
    pub rho: [f64; 2],
    pub horizon: Horizon,
    /// Continuation probability of the shared stopping time drawn by the simulator;
    /// defaults to the smaller discount factor.
    pub rho_sim: Option<f64>,
}

impl RepeatedConfig {
    pub fn statistical(rho1: f64, rho2: f64) -> Self {
        RepeatedConfig {
            rho: [rho1, rho2],
            horizon: Horizon::Statistical,
            rho_sim: None,
        }
    }

    pub fn known(rho1: f64, rho2: f64, stages: usize) -> Self {
        RepeatedConfig {
            rho: [rho1, rho2],
            horizon: Horizon::Known(stages),
            rho_sim: None,
        }
    }

    pub fn rho(&self, j: Agent) -> f64 {
        self.rho[j.index()]
    }

    pub fn simulation_rho(&self) -> f64 {
        self.rho_sim.unwrap_or(self.rho[0].min(self.rho[1]))
    }

    pub fn validate(&self) -> Result<()> {
        for (field, r) in [("rho1", self.rho[0]), ("rho2", self.rho[1])] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("discount factor must lie in (0, 1), got {r}"),
                });
            }
        }
        if let Some(r) = self.rho_sim {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParameter {
                    field: "rho_sim",
                    reason: format!("continuation probability must lie in (0, 1), got {r}"),
                });
            }
        }
        if self.horizon == Horizon::Known(0) {
            return Err(Error::InvalidParameter {
                field: "horizon",
                reason: "a known horizon needs at least one stage".into(),
            });
        }
        Ok(())
    }
}

fn check_weight(field: &'static str, q: f64) -> Result<()> {
    if q >= 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: format!("weight must be finite and non-negative, got {q}"),
        })
    }
}

/// Stage payoff of agent `j` when the profile `a` is played.
pub fn stage_payoff(c: &DerivedConstants, j: Agent, a: &ActionProfile, q_j: f64) -> Result<f64> {
    individual_payoff(c, j, a.action(j), a.action(j.other()), q_j)
}

/// One-shot equilibrium payoff `u_j(dbar_i, dbar_j)`.
pub fn no_sharing_payoff(c: &DerivedConstants, j: Agent, q_j: f64) -> Result<f64> {
    stage_payoff(c, j, &ActionProfile::no_sharing(c), q_j)
}

/// `u_j(agreement) > u_j(no sharing)`.
pub fn is_individually_rational(
    c: &DerivedConstants,
    j: Agent,
    agreement: &ActionProfile,
    q_j: f64,
) -> Result<bool> {
    Ok(stage_payoff(c, j, agreement, q_j)? > no_sharing_payoff(c, j, q_j)?)
}

fn check_agreement(c: &DerivedConstants, agreement: &ActionProfile) -> Result<()> {
    for j in Agent::BOTH {
        let (lo, hi) = c.action_range(j);
        let a = agreement.action(j);
        if !(a >= lo && a <= hi) {
            return Err(Error::InvalidParameter {
                field: match j {
                    Agent::One => "d2_star",
                    Agent::Two => "d1_star",
                },
                reason: format!("{a} outside [{lo}, {hi})"),
            });
        }
    }
    Ok(())
}

/// Closed-form lower bound on agent `j`'s discount factor for grim-trigger play of
/// `agreement` to be subgame perfect. Values `>= 1` mean the agreement cannot be
/// sustained for that agent. The ratio is base-invariant and is evaluated in nats.
pub fn min_discount(
    c: &DerivedConstants,
    j: Agent,
    agreement: &ActionProfile,
    q_j: f64,
) -> Result<f64> {
    check_agreement(c, agreement)?;
    if !(q_j > 0.0 && q_j.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "q",
            reason: format!("the discount bound needs a positive fidelity weight, got {q_j}"),
        });
    }
    let i = j.other();
    let own_share = agreement.action(j); // D_i*
    let received = agreement.action(i); // D_j*
    if received >= c.dbar(j) {
        return Err(Error::DegenerateAgreement { agent: j });
    }
    let leak_gap = leakage_nats(c, j, own_share)? - leakage_nats(c, j, c.dbar(i))?;
    Ok(2.0 * leak_gap / (q_j * (c.dbar(j) / received).ln()))
}

/// One-stage deviation ratio
/// `(u_j(D_i, D_j*) - u_j(D_i*, D_j*)) / (u_j(D_i, D_j*) - u_j(dbar_i, dbar_j))`
/// for a deviant sharing level `D_i`.
pub fn deviation_ratio(
    c: &DerivedConstants,
    j: Agent,
    agreement: &ActionProfile,
    q_j: f64,
    deviant: f64,
) -> Result<f64> {
    let received = agreement.action(j.other());
    let u_dev = individual_payoff(c, j, deviant, received, q_j)?;
    let u_agree = stage_payoff(c, j, agreement, q_j)?;
    let u_punish = no_sharing_payoff(c, j, q_j)?;
    Ok((u_dev - u_agree) / (u_dev - u_punish))
}

/// Grid maximum of [`deviation_ratio`] over deviant actions in `(D_i*, dbar_i]`.
pub fn min_discount_oracle(
    c: &DerivedConstants,
    j: Agent,
    agreement: &ActionProfile,
    q_j: f64,
    grid_size: usize,
) -> Result<f64> {
    check_agreement(c, agreement)?;
    if grid_size < 1000 {
        return Err(Error::InvalidParameter {
            field: "grid_size",
            reason: format!("oracle grid needs at least 1000 points, got {grid_size}"),
        });
    }
    if agreement.action(j.other()) >= c.dbar(j) {
        return Err(Error::DegenerateAgreement { agent: j });
    }
    let own_share = agreement.action(j);
    let top = c.dbar(j.other());
    let mut best = f64::NEG_INFINITY;
    for d in grid::open_closed(own_share, top, grid_size) {
        best = best.max(deviation_ratio(c, j, agreement, q_j, d)?);
    }
    Ok(best)
}

/// Normalised value of deviating once at stage `tau` and being punished forever after:
/// `u* - rho^(tau-1) [u* - u_dev + rho (u_dev - u_punish)]`.
pub fn deviation_value(u_agree: f64, u_dev: f64, u_punish: f64, rho: f64, tau: u32) -> f64 {
    u_agree - rho.powi(tau as i32 - 1) * (u_agree - u_dev + rho * (u_dev - u_punish))
}

/// Individual rationality, discount bounds and sustainability of one agreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementAnalysis {
    pub agreement: ActionProfile,
    pub rational: [bool; 2],
    pub rho_min: [f64; 2],
    pub sustainable: bool,
}

impl AgreementAnalysis {
    pub fn d2_star(&self) -> f64 {
        self.agreement.a1
    }

    pub fn d1_star(&self) -> f64 {
        self.agreement.a2
    }

    pub fn is_rational(&self) -> bool {
        self.rational[0] && self.rational[1]
    }
}

pub fn analyze_agreement(
    c: &DerivedConstants,
    q: [f64; 2],
    agreement: ActionProfile,
) -> Result<AgreementAnalysis> {
    let mut rational = [false; 2];
    let mut rho_min = [f64::INFINITY; 2];
    for j in Agent::BOTH {
        let k = j.index();
        rational[k] = is_individually_rational(c, j, &agreement, q[k])?;
        if q[k] > 0.0 {
            rho_min[k] = min_discount(c, j, &agreement, q[k])?;
        }
    }
    let sustainable = rational[0] && rational[1] && rho_min[0].max(rho_min[1]) < 1.0;
    Ok(AgreementAnalysis {
        agreement,
        rational,
        rho_min,
        sustainable,
    })
}

/// Agreement analysis over a `resolution x resolution` grid of
/// `[d_min,2, dbar_2) x [d_min,1, dbar_1)`, `d2_star` varying slowest. The last grid line
/// sits one step inside the targets.
pub fn agreement_region(
    c: &DerivedConstants,
    q: [f64; 2],
    resolution: usize,
) -> Result<Vec<AgreementAnalysis>> {
    check_weight("q1", q[0])?;
    check_weight("q2", q[1])?;
    if resolution < 2 {
        return Err(Error::InvalidParameter {
            field: "resolution",
            reason: format!("grid needs at least 2 points per axis, got {resolution}"),
        });
    }
    let d2s = grid::half_open(c.d_min[1], c.dbar[1], resolution);
    let d1s = grid::half_open(c.d_min[0], c.dbar[0], resolution);
    (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let agreement = ActionProfile::new(d2s[k / resolution], d1s[k % resolution]);
            analyze_agreement(c, q, agreement)
        })
        .collect()
}

/// Full-disclosure agreement `(d_min,2, d_min,1)` analysed under the maximal and the
/// midpoint target conventions.
pub fn full_disclosure_by_convention(
    params: &SystemParams,
    q: [f64; 2],
) -> Result<Vec<(TargetRule, AgreementAnalysis)>> {
    [TargetRule::Max, TargetRule::Fraction { t: 0.5 }]
        .into_iter()
        .map(|rule| {
            let c = params.with_target(rule).derive()?;
            Ok((
                rule,
                analyze_agreement(&c, q, ActionProfile::full_disclosure(&c))?,
            ))
        })
        .collect()
}

/// No-sharing path of the finite-horizon game plus evidence that it is forced.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonSpe {
    pub path: Vec<ActionProfile>,
    pub certificate: DominanceCertificate,
}

/// Checks that at every sampled stage and opponent action the no-sharing action beats
/// every other sampled own action in the stage payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceCertificate {
    pub samples: usize,
    /// Smallest observed `u_j(dbar_i, a_i) - max_{a_j < dbar_i} u_j(a_j, a_i)`.
    pub min_margin: f64,
}

impl DominanceCertificate {
    pub fn holds(&self) -> bool {
        self.min_margin > 0.0
    }
}

pub fn finite_horizon_spe(
    c: &DerivedConstants,
    q: [f64; 2],
    stages: usize,
) -> Result<FiniteHorizonSpe> {
    check_weight("q1", q[0])?;
    check_weight("q2", q[1])?;
    if stages == 0 {
        return Err(Error::InvalidParameter {
            field: "horizon",
            reason: "a known horizon needs at least one stage".into(),
        });
    }
    let path = vec![ActionProfile::no_sharing(c); stages];

    // The stage game does not depend on the history, so the opponent action stands in
    // for the history; stages are sampled at both ends and the middle.
    let mut sampled_stages = vec![1, stages.div_ceil(2), stages];
    sampled_stages.dedup();
    let mut samples = 0;
    let mut min_margin = f64::INFINITY;
    for _stage in &sampled_stages {
        for j in Agent::BOTH {
            let k = j.index();
            let (lo, hi) = c.action_range(j);
            let (lo_i, hi_i) = c.action_range(j.other());
            let own = grid::half_open(lo, hi, 100);
            for a_i in grid::linspace(lo_i, hi_i, 11) {
                let top = individual_payoff(c, j, hi, a_i, q[k])?;
                let mut best_other = f64::NEG_INFINITY;
                for &a_j in &own {
                    best_other = best_other.max(individual_payoff(c, j, a_j, a_i, q[k])?);
                }
                min_margin = min_margin.min(top - best_other);
                samples += 1;
            }
        }
    }
    Ok(FiniteHorizonSpe {
        path,
        certificate: DominanceCertificate {
            samples,
            min_margin,
        },
    })
}

/// Behaviour of one agent in the repeated game.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Share nothing beyond the minimum at every stage.
    AlwaysNoShare,
    /// Play the agreement until anyone has deviated from it, then share nothing forever.
    GrimTrigger(ActionProfile),
    /// Follow `base` except at stage `stage` (1-based), where `action` is played.
    OneStageDeviation {
        base: Box<Policy>,
        stage: usize,
        action: f64,
    },
}

impl Policy {
    pub fn deviate(base: Policy, stage: usize, action: f64) -> Policy {
        Policy::OneStageDeviation {
            base: Box::new(base),
            stage,
            action,
        }
    }

    /// Action of agent `j` at 1-based `stage` after observing `history`.
    pub fn action(
        &self,
        c: &DerivedConstants,
        j: Agent,
        stage: usize,
        history: &[ActionProfile],
    ) -> f64 {
        match self {
            Policy::AlwaysNoShare => c.dbar(j.other()),
            Policy::GrimTrigger(agreement) => {
                if history.iter().any(|a| a.max_abs_diff(agreement) > 1e-12) {
                    c.dbar(j.other())
                } else {
                    agreement.action(j)
                }
            }
            Policy::OneStageDeviation {
                base,
                stage: tau,
                action,
            } => {
                if stage == *tau {
                    *action
                } else {
                    base.action(c, j, stage, history)
                }
            }
        }
    }

    /// Last stage at which the policy does something non-stationary.
    fn last_special_stage(&self) -> usize {
        match self {
            Policy::OneStageDeviation { base, stage, .. } => {
                (*stage).max(base.last_special_stage())
            }
            _ => 0,
        }
    }

    fn validate(&self, c: &DerivedConstants, j: Agent) -> Result<()> {
        match self {
            Policy::AlwaysNoShare => Ok(()),
            Policy::GrimTrigger(agreement) => check_agreement(c, agreement),
            Policy::OneStageDeviation {
                base,
                stage,
                action,
            } => {
                let (lo, hi) = c.action_range(j);
                if *stage == 0 {
                    return Err(Error::InvalidParameter {
                        field: "stage",
                        reason: "stages are numbered from 1".into(),
                    });
                }
                if !(*action >= lo && *action <= hi) {
                    return Err(Error::InvalidParameter {
                        field: "action",
                        reason: format!("deviant action {action} outside [{lo}, {hi}]"),
                    });
                }
                base.validate(c, j)
            }
        }
    }
}

fn play(c: &DerivedConstants, policies: &[Policy; 2], stages: usize) -> Vec<ActionProfile> {
    let mut history: Vec<ActionProfile> = Vec::with_capacity(stages);
    for stage in 1..=stages {
        let a1 = policies[0].action(c, Agent::One, stage, &history);
        let a2 = policies[1].action(c, Agent::Two, stage, &history);
        history.push(ActionProfile::new(a1, a2));
    }
    history
}

/// Exact discounted value of the (deterministic) play path for each agent.
pub fn analytic_values(
    c: &DerivedConstants,
    q: [f64; 2],
    policies: &[Policy; 2],
    config: &RepeatedConfig,
) -> Result<[f64; 2]> {
    config.validate()?;
    let mut out = [0.0; 2];
    let prefix_len = match config.horizon {
        Horizon::Known(t) => t,
        Horizon::Statistical => {
            policies[0]
                .last_special_stage()
                .max(policies[1].last_special_stage())
                + 2
        }
    };
    let path = play(c, policies, prefix_len);
    for j in Agent::BOTH {
        let k = j.index();
        let stages = path
            .iter()
            .map(|a| stage_payoff(c, j, a, q[k]))
            .collect::<Result<Vec<f64>>>()?;
        let seq = match config.horizon {
            Horizon::Known(_) => StagePayoffSeq::finite(stages),
            Horizon::Statistical => {
                // after the last special stage the path is stationary
                let tail = *stages.last().expect("non-empty path");
                StagePayoffSeq::with_tail(stages, tail)
            }
        };
        out[k] = discounted_value(&seq, config.rho[k])?;
    }
    Ok(out)
}

/// Where a one-stage deviation was tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageClass {
    OnPath,
    PostDefection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationWitness {
    pub agent: Agent,
    pub stage_class: StageClass,
    /// Stage of the deviation (1 for stationary histories).
    pub stage: usize,
    pub deviant_action: f64,
    /// Change in the deviator's normalised value from the stage of the deviation on.
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeVerdict {
    Accept,
    Reject(DeviationWitness),
}

impl SpeVerdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, SpeVerdict::Accept)
    }
}

/// Strategy profile whose subgame perfection is checked by [`verify_spe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CandidateProfile {
    AlwaysNoShare,
    GrimTrigger(ActionProfile),
}

fn deviation_grid(c: &DerivedConstants, j: Agent) -> Vec<f64> {
    let (lo, hi) = c.action_range(j);
    grid::linspace(lo, hi, DEVIATION_GRID)
}

/// One-stage-deviation check of a stationary candidate profile.
///
/// Two history classes cover every subgame: histories on the agreement path and
/// histories after a defection, where both agents share nothing. Deviations are swept
/// over the whole action interval, including more generous sharing than agreed.
pub fn verify_spe(
    c: &DerivedConstants,
    q: [f64; 2],
    candidate: &CandidateProfile,
    config: &RepeatedConfig,
) -> Result<SpeVerdict> {
    config.validate()?;
    check_weight("q1", q[0])?;
    check_weight("q2", q[1])?;

    let mut worst: Option<DeviationWitness> = None;
    let mut consider = |w: DeviationWitness| {
        if worst.is_none_or(|cur| w.gain > cur.gain) {
            worst = Some(w);
        }
    };

    for j in Agent::BOTH {
        let k = j.index();
        let rho = config.rho[k];
        let u_punish = no_sharing_payoff(c, j, q[k])?;

        // after a defection (and everywhere under no sharing): the continuation does not
        // react, so only the stage payoff changes
        for d in deviation_grid(c, j) {
            if d == c.dbar(j.other()) {
                continue;
            }
            let u_dev = individual_payoff(c, j, d, c.dbar(j), q[k])?;
            consider(DeviationWitness {
                agent: j,
                stage_class: StageClass::PostDefection,
                stage: 1,
                deviant_action: d,
                gain: (1.0 - rho) * (u_dev - u_punish),
            });
        }

        let CandidateProfile::GrimTrigger(agreement) = candidate else {
            continue;
        };
        check_agreement(c, agreement)?;
        let u_agree = stage_payoff(c, j, agreement, q[k])?;
        let received = agreement.action(j.other());
        for d in deviation_grid(c, j).into_iter().chain([c.dbar(j.other())]) {
            if (d - agreement.action(j)).abs() <= 1e-15 {
                continue;
            }
            let u_dev = individual_payoff(c, j, d, received, q[k])?;
            match config.horizon {
                Horizon::Statistical => consider(DeviationWitness {
                    agent: j,
                    stage_class: StageClass::OnPath,
                    stage: 1,
                    deviant_action: d,
                    gain: deviation_value(u_agree, u_dev, u_punish, rho, 1) - u_agree,
                }),
                Horizon::Known(t) => {
                    // the punishment bracket is monotone in the deviation stage, so the
                    // first and the last stage bound all others
                    for tau in [1, t] {
                        let rest = (1..=(t - tau) as i32).map(|s| rho.powi(s)).sum::<f64>();
                        let gain = (1.0 - rho)
                            * rho.powi(tau as i32 - 1)
                            * ((u_dev - u_agree) + rest * (u_punish - u_agree));
                        consider(DeviationWitness {
                            agent: j,
                            stage_class: StageClass::OnPath,
                            stage: tau,
                            deviant_action: d,
                            gain,
                        });
                    }
                }
            }
        }
    }

    let witness = worst.expect("deviation grids are non-empty");
    let analytic_ok = match (candidate, config.horizon) {
        (CandidateProfile::AlwaysNoShare, _) => true,
        (CandidateProfile::GrimTrigger(_), Horizon::Known(_)) => false,
        (CandidateProfile::GrimTrigger(agreement), Horizon::Statistical) => {
            let a = analyze_agreement(c, q, *agreement)?;
            a.is_rational() && config.rho[0] > a.rho_min[0] && config.rho[1] > a.rho_min[1]
        }
    };
    if analytic_ok && witness.gain <= 0.0 {
        Ok(SpeVerdict::Accept)
    } else {
        Ok(SpeVerdict::Reject(witness))
    }
}

/// Monte Carlo estimate of each agent's discounted value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationReport {
    pub mean: [f64; 2],
    pub std_err: [f64; 2],
    pub trials: usize,
    pub rho_sim: f64,
    /// Largest `|u_j|` over every simulated stage.
    pub max_abs_stage_payoff: [f64; 2],
}

/// Simulates repeated play with one shared geometric stopping time per trial
/// (`P(T = t) = (1 - rho_sim) rho_sim^(t-1)`).
///
/// With a statistical horizon each trial records the stage payoff at the stopping stage,
/// reweighted by `(1 - rho_j) rho_j^(T-1) / ((1 - rho_sim) rho_sim^(T-1))`, whose
/// expectation is the normalised discounted value of agent `j`. The weight is 1 when
/// `rho_j = rho_sim`; otherwise its variance is finite only for `rho_j^2 < rho_sim`.
/// With a known horizon every trial plays all stages and the exact discounted sum is used.
///
/// Trial `k` draws from its own ChaCha stream, so results do not depend on the number of
/// worker threads.
pub fn simulate_repeated(
    c: &DerivedConstants,
    q: [f64; 2],
    policies: &[Policy; 2],
    config: &RepeatedConfig,
    trials: usize,
    seed: u64,
) -> Result<SimulationReport> {
    config.validate()?;
    check_weight("q1", q[0])?;
    check_weight("q2", q[1])?;
    if trials == 0 {
        return Err(Error::InvalidParameter {
            field: "trials",
            reason: "at least one trial is needed".into(),
        });
    }
    for j in Agent::BOTH {
        policies[j.index()].validate(c, j)?;
    }
    let rho_sim = config.simulation_rho();
    if config.horizon == Horizon::Statistical && config.rho.iter().any(|r| r * r >= rho_sim) {
        return Err(Error::InvalidParameter {
            field: "rho_sim",
            reason: format!(
                "importance weights have infinite variance unless rho_j^2 < rho_sim = {rho_sim}"
            ),
        });
    }
    let stopping = Geometric::new(1.0 - rho_sim).map_err(|e| Error::InvalidParameter {
        field: "rho_sim",
        reason: e.to_string(),
    })?;

    let per_trial: Vec<([f64; 2], [f64; 2])> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let stages = match config.horizon {
                Horizon::Known(t) => t,
                Horizon::Statistical => 1 + stopping.sample(&mut rng) as usize,
            };
            let path = play(c, policies, stages);
            let mut value = [0.0; 2];
            let mut max_abs = [0.0f64; 2];
            for j in Agent::BOTH {
                let k = j.index();
                let rho = config.rho[k];
                let payoffs = path
                    .iter()
                    .map(|a| stage_payoff(c, j, a, q[k]))
                    .collect::<Result<Vec<f64>>>()?;
                max_abs[k] = payoffs.iter().fold(0.0, |m, u| m.max(u.abs()));
                value[k] = match config.horizon {
                    Horizon::Known(_) => discounted_value(&StagePayoffSeq::finite(payoffs), rho)?,
                    Horizon::Statistical => {
                        let last = stages as i32 - 1;
                        let weight = if rho == rho_sim {
                            1.0
                        } else {
                            (1.0 - rho) / (1.0 - rho_sim) * (rho / rho_sim).powi(last)
                        };
                        weight * payoffs[stages - 1]
                    }
                };
            }
            Ok((value, max_abs))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = trials as f64;
    let mut mean = [0.0; 2];
    let mut max_abs = [0.0f64; 2];
    for (v, m) in &per_trial {
        for k in 0..2 {
            mean[k] += v[k];
            max_abs[k] = max_abs[k].max(m[k]);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut std_err = [0.0; 2];
    if trials > 1 {
        for k in 0..2 {
            let ss: f64 = per_trial
                .iter()
                .map(|(v, _)| (v[k] - mean[k]).powi(2))
                .sum();
            std_err[k] = (ss / (n - 1.0)).sqrt() / n.sqrt();
        }
    }
    Ok(SimulationReport {
        mean,
        std_err,
        trials,
        rho_sim,
        max_abs_stage_payoff: max_abs,
    })
}
