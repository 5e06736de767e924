//! Two-agent competitive privacy: the distortion-leakage region of a linear Gaussian
//! measurement model, the centralized common-goal game over data-sharing levels, and
//! the discounted repeated game that sustains sharing agreements without a controller.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::approx_constant, clippy::needless_range_loop))]

pub mod cli;
pub mod error;
pub mod grid;
pub mod model;
pub mod payoffs;
pub mod potential_game;
pub mod repeated_game;
pub mod scenarios;

pub use error::{Agent, Error, Result};
pub use model::{DerivedConstants, DlTuple, SystemParams, TargetRule};
pub use payoffs::ActionProfile;
