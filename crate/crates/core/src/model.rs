//! Two-agent linear Gaussian measurement model and its distortion-leakage region.
//!
//! Agent `j` observes `Y_j = X_j + alpha_j X_i + Z_j` with unit-variance states and
//! noise variance `sigma_j^2`. Everything downstream is expressed through the closed-form
//! constants in [`DerivedConstants`]: the per-agent distortion interval
//! `[d_min, d_max]`, the leakage curve `L_i(D_j)` and the affine reparametrisation
//! `-L_j(a_j) = 1/2 log(gamma_j a_j + delta_j)` used by the potential game.
//!
//! Leakages are reported in bits per sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Agent, Error, Result};
use crate::grid;

/// How the target distortions `dbar_j` are chosen inside `(d_min,j, d_max,j]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetRule {
    /// `dbar_j = d_max,j` (no sharing at all is the reference point).
    Max,
    /// `dbar_j = d_min,j + t (d_max,j - d_min,j)`, `t` in `(0, 1]`.
    Fraction { t: f64 },
    /// Explicit targets, validated against the feasible intervals.
    Explicit { dbar1: f64, dbar2: f64 },
}

impl Default for TargetRule {
    fn default() -> Self {
        TargetRule::Fraction { t: 0.5 }
    }
}

/// Raw scenario inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub target_rule: TargetRule,
}

impl SystemParams {
    pub fn new(alpha1: f64, alpha2: f64, sigma1_sq: f64, sigma2_sq: f64) -> Self {
        SystemParams {
            alpha1,
            alpha2,
            sigma1_sq,
            sigma2_sq,
            target_rule: TargetRule::default(),
        }
    }

    /// Same noise variance at both agents.
    pub fn symmetric_noise(alpha1: f64, alpha2: f64, sigma_sq: f64) -> Self {
        Self::new(alpha1, alpha2, sigma_sq, sigma_sq)
    }

    pub fn with_target(mut self, rule: TargetRule) -> Self {
        self.target_rule = rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
        ];
        for (field, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be a finite positive number, got {value}"),
                });
            }
        }
        if let TargetRule::Fraction { t } = self.target_rule {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidParameter {
                    field: "t",
                    reason: format!("target fraction must lie in (0, 1], got {t}"),
                });
            }
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<DerivedConstants> {
        derive_constants(self)
    }
}

/// Closed-form constants of the distortion-leakage region.
///
/// Every array is indexed by [`Agent::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub alpha: [f64; 2],
    pub sigma_sq: [f64; 2],
    /// Measurement variances `1 + alpha_j^2 + sigma_j^2`.
    pub v: [f64; 2],
    /// Cross-covariance `alpha1 + alpha2`.
    pub e: f64,
    pub n: [f64; 2],
    pub m: [f64; 2],
    pub d_min: [f64; 2],
    pub d_max: [f64; 2],
    /// `(n_j / m_j)^2`.
    pub gamma: [f64; 2],
    /// `d_min,j - gamma_j d_min,i`.
    pub delta: [f64; 2],
    /// Resolved target distortions.
    pub dbar: [f64; 2],
}

impl DerivedConstants {
    pub fn d_min(&self, j: Agent) -> f64 {
        self.d_min[j.index()]
    }

    pub fn d_max(&self, j: Agent) -> f64 {
        self.d_max[j.index()]
    }

    pub fn dbar(&self, j: Agent) -> f64 {
        self.dbar[j.index()]
    }

    pub fn gamma(&self, j: Agent) -> f64 {
        self.gamma[j.index()]
    }

    pub fn delta(&self, j: Agent) -> f64 {
        self.delta[j.index()]
    }

    /// Action interval of agent `j`: the distortion it imposes on the other agent.
    pub fn action_range(&self, j: Agent) -> (f64, f64) {
        let i = j.other();
        (self.d_min(i), self.dbar(i))
    }

    /// Copy with the target distortions replaced (validated like [`TargetRule::Explicit`]).
    pub fn with_targets(&self, rule: TargetRule) -> Result<DerivedConstants> {
        let mut out = *self;
        out.dbar = resolve_targets(rule, self.d_min, self.d_max)?;
        Ok(out)
    }
}

pub fn derive_constants(params: &SystemParams) -> Result<DerivedConstants> {
    params.validate()?;
    let alpha = [params.alpha1, params.alpha2];
    let sigma_sq = [params.sigma1_sq, params.sigma2_sq];
    let v = [
        1.0 + alpha[0] * alpha[0] + sigma_sq[0],
        1.0 + alpha[1] * alpha[1] + sigma_sq[1],
    ];
    let e = alpha[0] + alpha[1];
    let det = v[0] * v[1] - e * e;
    if !(det > 0.0) {
        return Err(Error::NonPositiveDefinite { det });
    }

    let mut n = [0.0; 2];
    let mut m = [0.0; 2];
    let mut d_min = [0.0; 2];
    let mut d_max = [0.0; 2];
    for j in Agent::BOTH {
        let (jx, ix) = (j.index(), j.other().index());
        n[jx] = (v[ix] - alpha[ix] * e) / det;
        let m_num = alpha[jx] * v[ix] - e;
        if m_num.abs() <= 1e-12 * (alpha[jx] * v[ix]).abs().max(e.abs()) {
            return Err(Error::DegenerateEstimator { agent: j });
        }
        m[jx] = m_num / det;
        d_min[jx] = 1.0 - (alpha[ix] * alpha[ix] * v[jx] + v[ix] - 2.0 * alpha[ix] * e) / det;
        d_max[jx] = 1.0 - 1.0 / v[jx];
        if !(0.0 < d_min[jx] && d_min[jx] < d_max[jx] && d_max[jx] < 1.0) {
            return Err(Error::InvariantViolation(format!(
                "expected 0 < d_min{j} < d_max{j} < 1, got d_min = {}, d_max = {}",
                d_min[jx], d_max[jx]
            )));
        }
    }

    let gamma = [(n[0] / m[0]).powi(2), (n[1] / m[1]).powi(2)];
    let delta = [
        d_min[0] - gamma[0] * d_min[1],
        d_min[1] - gamma[1] * d_min[0],
    ];
    let dbar = resolve_targets(params.target_rule, d_min, d_max)?;

    Ok(DerivedConstants {
        alpha,
        sigma_sq,
        v,
        e,
        n,
        m,
        d_min,
        d_max,
        gamma,
        delta,
        dbar,
    })
}

fn resolve_targets(rule: TargetRule, d_min: [f64; 2], d_max: [f64; 2]) -> Result<[f64; 2]> {
    match rule {
        TargetRule::Max => Ok(d_max),
        TargetRule::Fraction { t } => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidParameter {
                    field: "t",
                    reason: format!("target fraction must lie in (0, 1], got {t}"),
                });
            }
            Ok([
                d_min[0] + t * (d_max[0] - d_min[0]),
                d_min[1] + t * (d_max[1] - d_min[1]),
            ])
        }
        TargetRule::Explicit { dbar1, dbar2 } => {
            let dbar = [dbar1, dbar2];
            for j in Agent::BOTH {
                let k = j.index();
                if !(dbar[k] > d_min[k] && dbar[k] <= d_max[k]) {
                    return Err(Error::TargetOutOfRange {
                        agent: j,
                        value: dbar[k],
                        lower: d_min[k],
                        upper: d_max[k],
                    });
                }
            }
            Ok(dbar)
        }
    }
}

const LN2: f64 = std::f64::consts::LN_2;

/// Leakage floor of agent `i`: what agent `j` learns about `X_i` from its own
/// measurement alone, `1/2 ln(V_j / (V_j - alpha_j^2))` (nats).
pub fn min_leakage_nats(c: &DerivedConstants, i: Agent) -> f64 {
    let j = i.other().index();
    0.5 * (c.v[j] / (c.v[j] - c.alpha[j] * c.alpha[j])).ln()
}

/// Leakage floor of agent `i` in bits.
pub fn min_leakage(c: &DerivedConstants, i: Agent) -> f64 {
    min_leakage_nats(c, i) / LN2
}

/// Leakage `L_i(D_j)` of agent `i` in nats, given the distortion `d_j` achieved by agent `j`.
pub fn leakage_nats(c: &DerivedConstants, i: Agent, d_j: f64) -> Result<f64> {
    let j = i.other();
    let (ix, jx) = (i.index(), j.index());
    if !(d_j >= c.d_min[jx]) {
        return Err(Error::DistortionBelowMinimum {
            agent: j,
            value: d_j,
            minimum: c.d_min[jx],
        });
    }
    if d_j >= c.d_max[jx] {
        return Ok(min_leakage_nats(c, i));
    }
    let m2 = c.m[ix] * c.m[ix];
    let n2 = c.n[ix] * c.n[ix];
    Ok(0.5 * (m2 / (m2 * c.d_min[ix] + n2 * (d_j - c.d_min[jx]))).ln())
}

/// Leakage `L_i(D_j)` in bits per sample.
pub fn leakage(c: &DerivedConstants, i: Agent, d_j: f64) -> Result<f64> {
    leakage_nats(c, i, d_j).map(|l| l / LN2)
}

/// A point `(D1, D2, L1, L2)` of the achievable region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DlTuple {
    pub d1: f64,
    pub d2: f64,
    pub l1: f64,
    pub l2: f64,
}

pub fn dl_tuple(c: &DerivedConstants, d1: f64, d2: f64) -> Result<DlTuple> {
    Ok(DlTuple {
        d1,
        d2,
        l1: leakage(c, Agent::One, d2)?,
        l2: leakage(c, Agent::Two, d1)?,
    })
}

/// Uniform `resolution x resolution` grid over `[d_min,1, d_max,1] x [d_min,2, d_max,2]`,
/// row-major in `d1`, endpoints included.
pub fn region_grid(c: &DerivedConstants, resolution: usize) -> Result<Vec<DlTuple>> {
    if resolution < 2 {
        return Err(Error::InvalidParameter {
            field: "resolution",
            reason: format!("grid needs at least 2 points per axis, got {resolution}"),
        });
    }
    let d1s = grid::linspace(c.d_min[0], c.d_max[0], resolution);
    let d2s = grid::linspace(c.d_min[1], c.d_max[1], resolution);
    (0..resolution * resolution)
        .into_par_iter()
        .map(|k| dl_tuple(c, d1s[k / resolution], d2s[k % resolution]))
        .collect()
}
