//! The two-phase static protocol, in its native two-channel form and in the
//! fixed odd/even single-channel mapping.
//!
//! Phase I tracks a probability control variable `l`: each slot the node
//! sends with `min{1, 1/l}` on the data channel and `min{1, (c log l)/l}` on
//! the control channel. A control-channel success halves `l` (floored at 1)
//! and records the post-halving value in `m`; otherwise `l` grows by one.
//! Once `m <= t / log2(t)` the node switches to phase II, a fresh
//! `Backoff((c log x)/x)` on the control channel only.

use serde::{Deserialize, Serialize};

use super::schedule::BackoffSchedule;
use crate::sim::types::Feedback;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticPhase {
    One,
    Two,
}

/// State of a node running the static protocol.
///
/// `l` is a positive real, not an integer: halving odd values must not
/// truncate or the `m` tracking drifts. `m = None` encodes "infinity"
/// (no control success seen yet), which blocks the phase transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticNodeState {
    pub l: f64,
    /// Slots elapsed in phase I, 1-based (the first slot runs with t = 1).
    pub t: u64,
    /// Minimum over all post-halving values of `l`; `None` before the first
    /// control success.
    pub m: Option<f64>,
    pub phase: StaticPhase,
    /// Backoff index for the fresh phase-II schedule; valid in phase II.
    pub phase2_age: u64,
}

impl StaticNodeState {
    pub fn new() -> Self {
        StaticNodeState {
            l: 1.0,
            t: 1,
            m: None,
            phase: StaticPhase::One,
            phase2_age: 1,
        }
    }
}

impl Default for StaticNodeState {
    fn default() -> Self {
        Self::new()
    }
}

/// Per-channel probabilities `(data, control)` for the current state.
#[inline(always)]
pub fn static_step(state: &StaticNodeState, c: f64) -> [f64; 2] {
    match state.phase {
        StaticPhase::One => {
            let data = (1.0 / state.l).min(1.0);
            let control = (c * (state.l + 1.0).log2() / state.l).min(1.0);
            [data, control]
        }
        StaticPhase::Two => [
            0.0,
            BackoffSchedule::LogReciprocal { c }.prob_unchecked(state.phase2_age),
        ],
    }
}

/// Apply the end-of-slot phase-I update: halve-or-increment `l` from the
/// control-channel feedback, advance `t`, and test the phase transition.
///
/// Errors when called on a phase-II state.
pub fn static_phase1_update(
    state: &StaticNodeState,
    control_feedback: Feedback,
) -> Result<StaticNodeState> {
    if state.phase == StaticPhase::Two {
        return Err(Error::InvalidArgument(
            "static phase-I update called in phase II".into(),
        ));
    }
    let mut next = *state;
    match control_feedback {
        Feedback::Success(_) => {
            next.l = (next.l / 2.0).max(1.0);
            next.m = Some(match next.m {
                Some(m) => m.min(next.l),
                None => next.l,
            });
        }
        Feedback::NoSuccess => next.l += 1.0,
    }
    next.t += 1;
    if let Some(m) = next.m {
        let t = next.t as f64;
        if m <= t / t.max(2.0).log2() {
            next.phase = StaticPhase::Two;
            next.phase2_age = 1;
        }
    }
    Ok(next)
}
