use std::fmt;

use crate::potential_game::BrDynamicsTrace;

/// One of the two agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Agent {
    One,
    Two,
}

impl Agent {
    pub const BOTH: [Agent; 2] = [Agent::One, Agent::Two];

    pub fn other(self) -> Agent {
        match self {
            Agent::One => Agent::Two,
            Agent::Two => Agent::One,
        }
    }

    /// Zero-based index into per-agent arrays.
    pub fn index(self) -> usize {
        match self {
            Agent::One => 0,
            Agent::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("measurement covariance is not positive definite (V1*V2 - E^2 = {det})")]
    NonPositiveDefinite { det: f64 },

    #[error("estimator coefficient m{agent} vanishes; gamma{agent} is undefined")]
    DegenerateEstimator { agent: Agent },

    #[error("target distortion dbar{agent} = {value} outside ({lower}, {upper}]")]
    TargetOutOfRange {
        agent: Agent,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("distortion {value} of agent {agent} is below its minimum {minimum}")]
    DistortionBelowMinimum {
        agent: Agent,
        value: f64,
        minimum: f64,
    },

    #[error("logarithm argument is not positive: {0}")]
    DomainError(String),

    #[error("minimum distortion of agent {agent} is zero; payoffs are unbounded")]
    DegenerateDistortion { agent: Agent },

    #[error("best-response slopes coincide at q = 2; the interior intersection is undefined")]
    SingularSlope,

    #[error("best-response dynamics did not converge within {} sweeps", .0.iterations)]
    MaxIterExceeded(Box<BrDynamicsTrace>),

    #[error(
        "agreement distortion of agent {agent} equals its target; the discount bound is singular"
    )]
    DegenerateAgreement { agent: Agent },

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
