//! The centralized common-goal game.
//!
//! Both agents maximise the same system payoff, so the game is an exact potential game
//! and its Nash equilibria are the fixed points of the joint best-response map. For
//! `q > 1` each best response is the affine map
//!
//! ```text
//! F_j(a_i) = a_i / (q - 1) - q delta_j / ((q - 1) gamma_j)
//! ```
//!
//! clipped to the action interval; for `q <= 1` the own-action objective has no interior
//! maximum and the best response jumps between the two ends of the interval. Equilibria
//! are enumerated exhaustively by solving the piecewise-affine fixed-point system one
//! piece combination at a time.

use rayon::prelude::*;

use crate::error::{Agent, Error, Result};
use crate::grid;
use crate::model::DerivedConstants;
use crate::payoffs::{system_payoff, ActionProfile};

/// Position of an equilibrium in the action rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NeKind {
    Interior,
    Border,
    Corner,
}

impl NeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NeKind::Interior => "interior",
            NeKind::Border => "border",
            NeKind::Corner => "corner",
        }
    }
}

/// Stability under sequential best-response dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    AsymptoticallyStable,
    Unstable,
    MarginallyStable,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::AsymptoticallyStable => "stable",
            Stability::Unstable => "unstable",
            Stability::MarginallyStable => "marginal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub profile: ActionProfile,
    pub kind: NeKind,
    pub stable: Stability,
    pub potential_value: f64,
}

/// A continuum of equilibria along `a1 = a2 + offset` (only when the two affine
/// responses coincide at `q = 2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSegment {
    pub start: ActionProfile,
    pub end: ActionProfile,
    /// Slope `da1/da2` of the line, always 1.
    pub slope: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EquilibriumSet {
    /// Isolated equilibria, plus the endpoints of the continuum if there is one.
    pub points: Vec<Equilibrium>,
    pub continuum: Option<EquilibriumSegment>,
}

impl EquilibriumSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

const RESIDUAL_TOL: f64 = 1e-9;
const EDGE_TOL: f64 = 1e-12;

fn profile_with(j: Agent, own: f64, other: f64) -> ActionProfile {
    match j {
        Agent::One => ActionProfile::new(own, other),
        Agent::Two => ActionProfile::new(other, own),
    }
}

/// The unclipped affine response `F_j(a_i)`; meaningful for `q != 1`.
pub fn affine_response(c: &DerivedConstants, j: Agent, a_i: f64, q: f64) -> f64 {
    a_i / (q - 1.0) - q * c.delta(j) / ((q - 1.0) * c.gamma(j))
}

/// Closed-form best response of agent `j` to the opponent action `a_i`.
///
/// * `q > 1`: `F_j(a_i)` clipped to the action interval.
/// * `q = 1`: the own-action derivative has the sign of `gamma_j a_i - delta_j`; the top
///   of the interval is chosen when it is non-negative.
/// * `q < 1`: the objective is quasi-convex in the own action, so the better endpoint
///   wins; an exact tie goes to the top of the interval.
pub fn best_response(c: &DerivedConstants, j: Agent, a_i: f64, q: f64) -> Result<f64> {
    let (lo, hi) = c.action_range(j);
    if q > 1.0 {
        Ok(affine_response(c, j, a_i, q).clamp(lo, hi))
    } else if q == 1.0 {
        if c.gamma(j) * a_i - c.delta(j) >= 0.0 {
            Ok(hi)
        } else {
            Ok(lo)
        }
    } else {
        let u_lo = system_payoff(c, &profile_with(j, lo, a_i), q)?;
        let u_hi = system_payoff(c, &profile_with(j, hi, a_i), q)?;
        Ok(if u_lo <= u_hi { hi } else { lo })
    }
}

/// Brute-force best response: argmax of the system payoff over a uniform grid of the own
/// action interval, ties resolved toward the larger action.
pub fn best_response_oracle(
    c: &DerivedConstants,
    j: Agent,
    a_i: f64,
    q: f64,
    grid_size: usize,
) -> Result<f64> {
    if grid_size < 100 {
        return Err(Error::InvalidParameter {
            field: "grid_size",
            reason: format!("oracle grid needs at least 100 points, got {grid_size}"),
        });
    }
    let (lo, hi) = c.action_range(j);
    let mut best = (f64::NEG_INFINITY, lo);
    for b in grid::linspace(lo, hi, grid_size) {
        let u = system_payoff(c, &profile_with(j, b, a_i), q)?;
        if u >= best.0 {
            best = (u, b);
        }
    }
    Ok(best.1)
}

/// Joint best-response map `(BR1(a2), BR2(a1))`.
pub fn joint_best_response(
    c: &DerivedConstants,
    a: &ActionProfile,
    q: f64,
) -> Result<ActionProfile> {
    Ok(ActionProfile::new(
        best_response(c, Agent::One, a.a2, q)?,
        best_response(c, Agent::Two, a.a1, q)?,
    ))
}

/// `max |BR(a) - a|`.
pub fn fixed_point_residual(c: &DerivedConstants, a: &ActionProfile, q: f64) -> Result<f64> {
    Ok(joint_best_response(c, a, q)?.max_abs_diff(a))
}

/// Intersection of the two affine responses, computed without clipping.
fn affine_intersection(c: &DerivedConstants, q: f64) -> ActionProfile {
    let r1 = c.delta[0] / c.gamma[0];
    let r2 = c.delta[1] / c.gamma[1];
    let k = q / (1.0 - (q - 1.0) * (q - 1.0));
    ActionProfile::new(k * (r1 * (q - 1.0) + r2), k * (r2 * (q - 1.0) + r1))
}

fn inside_rectangle(c: &DerivedConstants, a: &ActionProfile, tol: f64) -> bool {
    Agent::BOTH.iter().all(|&j| {
        let (lo, hi) = c.action_range(j);
        let x = a.action(j);
        x >= lo - tol && x <= hi + tol
    })
}

/// Interior intersection point of `F_1` and `F_2`, or `None` if it lies outside the
/// closed action rectangle.
pub fn interior_intersection(c: &DerivedConstants, q: f64) -> Result<Option<ActionProfile>> {
    if !(q > 1.0) {
        return Err(Error::InvalidParameter {
            field: "q",
            reason: format!("affine best responses need q > 1, got {q}"),
        });
    }
    if q == 2.0 {
        return Err(Error::SingularSlope);
    }
    let a = affine_intersection(c, q);
    Ok(inside_rectangle(c, &a, EDGE_TOL).then_some(a))
}

fn classify_kind(c: &DerivedConstants, a: &ActionProfile) -> NeKind {
    let mut on_edge = 0;
    for j in Agent::BOTH {
        let (lo, hi) = c.action_range(j);
        let x = a.action(j);
        let tol = EDGE_TOL * (1.0 + hi.abs());
        if (x - lo).abs() <= tol || (x - hi).abs() <= tol {
            on_edge += 1;
        }
    }
    match on_edge {
        0 => NeKind::Interior,
        1 => NeKind::Border,
        _ => NeKind::Corner,
    }
}

/// Largest slope of `BR_j` on a punctured neighbourhood of `a_i`: `1/(q-1)` where the
/// affine piece is active (including at a kink), 0 on a clipped piece.
fn local_slope(c: &DerivedConstants, j: Agent, a_i: f64, q: f64) -> f64 {
    if q <= 1.0 {
        return 0.0;
    }
    let (lo, hi) = c.action_range(j);
    let f = affine_response(c, j, a_i, q);
    let tol = EDGE_TOL * (1.0 + hi.abs());
    if f < lo - tol || f > hi + tol {
        0.0
    } else {
        1.0 / (q - 1.0)
    }
}

/// Stability from the product of best-response slopes around the equilibrium.
pub fn classify_stability(c: &DerivedConstants, eq: &ActionProfile, q: f64) -> Stability {
    let product =
        (local_slope(c, Agent::One, eq.a2, q) * local_slope(c, Agent::Two, eq.a1, q)).abs();
    if (product - 1.0).abs() <= 1e-12 {
        Stability::MarginallyStable
    } else if product < 1.0 {
        Stability::AsymptoticallyStable
    } else {
        Stability::Unstable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Low,
    Affine,
    High,
}

const PIECES: [Piece; 3] = [Piece::Low, Piece::Affine, Piece::High];

fn make_equilibrium(c: &DerivedConstants, profile: ActionProfile, q: f64) -> Result<Equilibrium> {
    Ok(Equilibrium {
        profile,
        kind: classify_kind(c, &profile),
        stable: classify_stability(c, &profile, q),
        potential_value: system_payoff(c, &profile, q)?,
    })
}

fn push_unique(out: &mut Vec<ActionProfile>, a: ActionProfile) {
    if !out.iter().any(|b| b.max_abs_diff(&a) <= 1e-10) {
        out.push(a);
    }
}

/// All pure Nash equilibria of the common-goal game for weight `q`, sorted by `a1`.
pub fn enumerate_equilibria(c: &DerivedConstants, q: f64) -> Result<EquilibriumSet> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "q",
            reason: format!("weight must be finite and non-negative, got {q}"),
        });
    }
    let (lo1, hi1) = c.action_range(Agent::One);
    let (lo2, hi2) = c.action_range(Agent::Two);

    let mut candidates = Vec::new();
    let mut continuum = None;

    if q <= 1.0 {
        for a1 in [lo1, hi1] {
            for a2 in [lo2, hi2] {
                candidates.push(ActionProfile::new(a1, a2));
            }
        }
    } else {
        for p1 in PIECES {
            for p2 in PIECES {
                let fixed1 = match p1 {
                    Piece::Low => Some(lo1),
                    Piece::High => Some(hi1),
                    Piece::Affine => None,
                };
                let fixed2 = match p2 {
                    Piece::Low => Some(lo2),
                    Piece::High => Some(hi2),
                    Piece::Affine => None,
                };
                let cand = match (fixed1, fixed2) {
                    (Some(a1), Some(a2)) => Some(ActionProfile::new(a1, a2)),
                    (Some(a1), None) => Some(ActionProfile::new(
                        a1,
                        affine_response(c, Agent::Two, a1, q),
                    )),
                    (None, Some(a2)) => Some(ActionProfile::new(
                        affine_response(c, Agent::One, a2, q),
                        a2,
                    )),
                    (None, None) if q != 2.0 => Some(affine_intersection(c, q)),
                    (None, None) => {
                        continuum = coincident_segment(c);
                        None
                    }
                };
                if let Some(a) = cand {
                    candidates.push(a);
                }
            }
        }
    }

    let mut found: Vec<ActionProfile> = Vec::new();
    if let Some(seg) = &continuum {
        push_unique(&mut found, seg.start);
        push_unique(&mut found, seg.end);
    }
    for a in candidates {
        if !inside_rectangle(c, &a, EDGE_TOL) {
            continue;
        }
        if let Some(seg) = &continuum {
            let on_line = (a.a1 - a.a2 - seg.offset).abs() <= 1e-10;
            if on_line && a.a2 >= seg.start.a2 - 1e-10 && a.a2 <= seg.end.a2 + 1e-10 {
                continue;
            }
        }
        if fixed_point_residual(c, &a, q)? < RESIDUAL_TOL {
            push_unique(&mut found, a);
        }
    }
    found.sort_by(|x, y| x.a1.total_cmp(&y.a1).then(x.a2.total_cmp(&y.a2)));

    let mut points = Vec::with_capacity(found.len());
    for a in found {
        let mut eq = make_equilibrium(c, a, q)?;
        if continuum.is_some() && q == 2.0 && eq.stable != Stability::AsymptoticallyStable {
            eq.stable = Stability::MarginallyStable;
        }
        points.push(eq);
    }
    Ok(EquilibriumSet { points, continuum })
}

/// At `q = 2` the responses are `a1 = a2 - 2 delta1/gamma1` and `a2 = a1 - 2 delta2/gamma2`;
/// they coincide iff `delta1/gamma1 + delta2/gamma2 = 0`.
fn coincident_segment(c: &DerivedConstants) -> Option<EquilibriumSegment> {
    let r1 = c.delta[0] / c.gamma[0];
    let r2 = c.delta[1] / c.gamma[1];
    if (r1 + r2).abs() > 1e-12 * (r1.abs() + r2.abs()).max(1e-300) {
        return None;
    }
    let (lo1, hi1) = c.action_range(Agent::One);
    let (lo2, hi2) = c.action_range(Agent::Two);
    let offset = -2.0 * r1;
    // a1 = a2 + offset inside both intervals
    let a2_start = lo2.max(lo1 - offset);
    let a2_end = hi2.min(hi1 - offset);
    if a2_end - a2_start <= EDGE_TOL {
        return None;
    }
    Some(EquilibriumSegment {
        start: ActionProfile::new(a2_start + offset, a2_start),
        end: ActionProfile::new(a2_end + offset, a2_end),
        slope: 1.0,
        offset,
    })
}

/// Iterates of sequential best-response play (agent 1 moves first in every sweep).
#[derive(Debug, Clone, PartialEq)]
pub struct BrDynamicsTrace {
    /// Profiles after each sweep; element 0 is the start.
    pub iterates: Vec<ActionProfile>,
    pub converged: bool,
    pub limit: ActionProfile,
    pub iterations: usize,
}

impl BrDynamicsTrace {
    /// System payoff at every iterate.
    pub fn potentials(&self, c: &DerivedConstants, q: f64) -> Result<Vec<f64>> {
        self.iterates
            .iter()
            .map(|a| system_payoff(c, a, q))
            .collect()
    }
}

pub fn br_dynamics(
    c: &DerivedConstants,
    start: ActionProfile,
    q: f64,
    tol: f64,
    max_iter: usize,
) -> Result<BrDynamicsTrace> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            field: "tol",
            reason: format!("tolerance must be positive, got {tol}"),
        });
    }
    if !start.in_range(c) {
        return Err(Error::InvalidParameter {
            field: "start",
            reason: format!(
                "({}, {}) is outside the action rectangle",
                start.a1, start.a2
            ),
        });
    }
    let mut iterates = vec![start];
    let mut current = start;
    for sweep in 1..=max_iter {
        let a1 = best_response(c, Agent::One, current.a2, q)?;
        let a2 = best_response(c, Agent::Two, a1, q)?;
        let next = ActionProfile::new(a1, a2);
        iterates.push(next);
        let step = next.max_abs_diff(&current);
        current = next;
        if step < tol {
            return Ok(BrDynamicsTrace {
                iterates,
                converged: true,
                limit: current,
                iterations: sweep,
            });
        }
    }
    Err(Error::MaxIterExceeded(Box::new(BrDynamicsTrace {
        iterates,
        converged: false,
        limit: current,
        iterations: max_iter,
    })))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QSweepEntry {
    pub q: f64,
    pub equilibria: EquilibriumSet,
}

/// Equilibria for each weight, in input order.
pub fn q_sweep(c: &DerivedConstants, q_values: &[f64]) -> Result<Vec<QSweepEntry>> {
    if q_values.is_empty() {
        return Err(Error::InvalidParameter {
            field: "q_values",
            reason: "empty sweep".into(),
        });
    }
    q_values
        .par_iter()
        .map(|&q| {
            Ok(QSweepEntry {
                q,
                equilibria: enumerate_equilibria(c, q)?,
            })
        })
        .collect()
}
