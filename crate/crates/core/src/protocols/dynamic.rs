//! The two-channel dynamic protocol, the plain-backoff baseline, and the
//! adversary-controlled interference node behavior.

use serde::{Deserialize, Serialize};

use super::schedule::BackoffSchedule;

/// State of a node running the dynamic two-channel protocol: just its age.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicNodeState {
    /// Slots since arrival, inclusive; the node's first slot has age 1.
    pub age: u64,
}

impl DynamicNodeState {
    pub fn new() -> Self {
        DynamicNodeState { age: 1 }
    }
}

impl Default for DynamicNodeState {
    fn default() -> Self {
        Self::new()
    }
}

/// One step of the dynamic protocol: emit `(min{1,1/x}, min{1,(c log x)/x})`
/// for the current age and advance the age by one.
pub fn dynamic_step(state: DynamicNodeState, c: f64) -> ([f64; 2], DynamicNodeState) {
    let probs = dynamic_probs(state, c);
    (probs, DynamicNodeState { age: state.age + 1 })
}

/// The per-channel probabilities the dynamic protocol emits at `state.age`.
#[inline(always)]
pub fn dynamic_probs(state: DynamicNodeState, c: f64) -> [f64; 2] {
    [
        BackoffSchedule::Reciprocal.prob_unchecked(state.age),
        BackoffSchedule::LogReciprocal { c }.prob_unchecked(state.age),
    ]
}

/// Single-channel baseline: one backoff schedule, run from arrival.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlainBackoffState {
    pub schedule: BackoffSchedule,
    pub age: u64,
}

impl PlainBackoffState {
    pub fn new(schedule: BackoffSchedule) -> Self {
        PlainBackoffState { schedule, age: 1 }
    }

    #[inline(always)]
    pub fn prob(&self) -> f64 {
        self.schedule.prob_unchecked(self.age)
    }
}

/// One step of plain `Backoff(1/x)`: probability at the current age, then
/// the incremented age.
pub fn plain_backoff_step(age: u64) -> (f64, u64) {
    (BackoffSchedule::Reciprocal.prob_unchecked(age), age + 1)
}

/// State of an adversary-injected interference node. It runs
/// `Backoff((c log x)/x)` on both channels; the channel-one instance may be
/// delayed by one slot. It halts upon hearing a success on any channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferenceState {
    pub injected_at: u64,
    /// If true the channel-one schedule starts the slot after injection.
    pub delayed_ch1: bool,
}

impl InterferenceState {
    /// Per-channel probabilities in global slot `slot >= injected_at`.
    pub fn probs(&self, slot: u64, c: f64) -> [f64; 2] {
        let sched = BackoffSchedule::LogReciprocal { c };
        let x2 = slot - self.injected_at + 1;
        let p1 = if self.delayed_ch1 {
            if slot == self.injected_at {
                0.0
            } else {
                sched.prob_unchecked(slot - self.injected_at)
            }
        } else {
            sched.prob_unchecked(x2)
        };
        [p1, sched.prob_unchecked(x2)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dynamic_step_age_one_emits_ones() {
        let (p, next) = dynamic_step(DynamicNodeState::new(), 4.0);
        assert_eq!(p, [1.0, 1.0]);
        assert_eq!(next.age, 2);
    }

    #[test]
    fn dynamic_step_age_100() {
        let (p, _) = dynamic_step(DynamicNodeState { age: 100 }, 4.0);
        assert!((p[0] - 0.01).abs() < 1e-15);
        assert!((p[1] - 0.266_328_459_310_071_76).abs() < 1e-12, "{}", p[1]);
    }

    #[test]
    fn dynamic_step_large_age_channel_one() {
        let (p, _) = dynamic_step(DynamicNodeState { age: 1_000_000 }, 4.0);
        assert!((p[0] - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn plain_backoff_values() {
        assert_eq!(plain_backoff_step(1).0, 1.0);
        assert_eq!(plain_backoff_step(2).0, 0.5);
        assert_eq!(plain_backoff_step(1000).0, 0.001);
        assert_eq!(plain_backoff_step(5), (0.2, 6));
    }

    #[test]
    fn interference_start_offsets() {
        let c = 4.0;
        let sched = BackoffSchedule::LogReciprocal { c };
        let now = InterferenceState {
            injected_at: 5,
            delayed_ch1: false,
        };
        // Schedule index 1 on both channels at the injection slot.
        assert_eq!(now.probs(5, c), [1.0, 1.0]);

        let delayed = InterferenceState {
            injected_at: 5,
            delayed_ch1: true,
        };
        // Channel one silent at slot 5, index 1 at slot 6; channel two
        // starts at the injection slot regardless.
        assert_eq!(delayed.probs(5, c), [0.0, 1.0]);
        assert_eq!(delayed.probs(6, c)[0], 1.0);
        assert_eq!(delayed.probs(6, c)[1], sched.prob_unchecked(2));
    }
}
