//! Backoff schedule family.
//!
//! A schedule is a probability function `h(x)` over the slot index `x` since
//! some start point; a node following it sends with probability
//! `min{1, h(x)}` in its `x`-th slot. Two families are used here:
//! `1/x` (plain binary exponential backoff) and `(c*log x)/x`.
//!
//! The raw `(c*log x)/x` form is zero at `x = 1`, so all logarithms are
//! base 2 and the schedules evaluate `log2(x + 1)`. This keeps the
//! asymptotics and makes a fresh node send with probability 1 in its first
//! slot.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A backoff probability schedule `x -> min{1, h(x)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackoffSchedule {
    /// `h(x) = 1/x`.
    Reciprocal,
    /// `h(x) = c * log2(x + 1) / x`.
    LogReciprocal { c: f64 },
}

impl BackoffSchedule {
    /// The clamped send probability at slot index `x >= 1`.
    pub fn prob(&self, x: u64) -> Result<f64> {
        if x == 0 {
            return Err(Error::InvalidArgument(
                "backoff schedule index must be >= 1".into(),
            ));
        }
        Ok(self.prob_unchecked(x))
    }

    /// As [`BackoffSchedule::prob`] but without the `x >= 1` check; used in
    /// the engine hot loop where indices are maintained internally.
    #[inline(always)]
    pub fn prob_unchecked(&self, x: u64) -> f64 {
        debug_assert!(x >= 1);
        match *self {
            BackoffSchedule::Reciprocal => {
                if x <= 1 {
                    1.0
                } else {
                    1.0 / x as f64
                }
            }
            BackoffSchedule::LogReciprocal { c } => {
                let v = c * ((x + 1) as f64).log2() / x as f64;
                v.min(1.0)
            }
        }
    }
}

/// The clamped probability `min{1, h(x)}` for a schedule at index `x`.
///
/// Errors when `x` is zero.
pub fn backoff_prob(schedule: BackoffSchedule, x: u64) -> Result<f64> {
    schedule.prob(x)
}
