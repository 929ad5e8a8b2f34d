//! Generic finite-horizon decision processes.
//!
//! A [`DecisionProcess`] carries one transition matrix and one reward vector
//! per `(epoch, action)` pair plus an action-independent terminal reward.
//! [`solve_backward_induction`] computes the optimal value function and a
//! deterministic Markov policy; [`evaluate_policy`] computes the exact
//! expected reward of any fixed policy; [`enumerate_optimal_bruteforce`]
//! is an exhaustive oracle for small instances.

mod bruteforce;
mod policy;
mod process;
mod solve;

use thiserror::Error;

pub use bruteforce::{enumerate_optimal_bruteforce, MAX_ENUMERATED_POLICIES};
pub use policy::{Policy, ValueFunction};
pub use process::{
    validate_process, ActionSet, DecisionProcess, Horizon, ProcessReport, ProcessViolation,
    StateSpace, TransitionMatrix, ROW_SUM_TOLERANCE,
};
pub use solve::{evaluate_policy, solve_backward_induction};

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid horizon: start {start} must be before end {end}")]
    InvalidHorizon { start: u32, end: u32 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid decision process: {0}")]
    InvalidProcess(ProcessReport),

    #[error("policy does not match the process: {0}")]
    PolicyMismatch(String),

    #[error("policy is missing {} (epoch, state) entries, first at {:?}", .0.len(), .0.first())]
    IncompletePolicy(Vec<(u32, usize)>),

    #[error("policy uses action {action} at (epoch {epoch}, state {state}) but only {available} actions exist")]
    UnknownAction {
        epoch: u32,
        state: usize,
        action: usize,
        available: usize,
    },

    #[error(
        "instance too large to enumerate: 2^{log2_policies:.1} policies exceeds the 2^24 limit"
    )]
    TooLargeToEnumerate { log2_policies: f64 },
}
