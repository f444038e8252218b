//! Single-channel wrapper for the dynamic two-channel protocol.
//!
//! Nodes have no global clock, so a freshly injected node first runs a
//! synchronization procedure: it splits the single channel into the two
//! sub-channels of slots `{t_u, t_u+2, ...}` and `{t_u+1, t_u+3, ...}` and
//! runs `Backoff((c log x)/x)` on each from local index 1. Upon hearing the
//! first success, at global slot `T`, the sub-channel containing `T` becomes
//! channel one and the node starts the two-channel protocol at slot `T + 2`.
//!
//! While running, a success heard on the current channel two at slot `T'`
//! swaps the channel roles: the node is silent in `T'+1` (one wasted slot)
//! and continues at `T'+2`, which now belongs to channel one. After any
//! success, every running node therefore agrees that channel one is the
//! parity of the most recent success slot.

use serde::{Deserialize, Serialize};

use super::dynamic::DynamicNodeState;
use super::schedule::BackoffSchedule;
use crate::sim::types::{Feedback, NodeId, SyncSnapshot};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyncMode {
    /// Both sub-channels run the aggressive schedule from local offsets.
    Syncing,
    Running {
        /// `slot % 2` of the slots currently treated as channel one.
        ch1_parity: u8,
        /// Embedded dynamic state; its age is the two-channel round index.
        dynamic: DynamicNodeState,
        /// True when the next participating slot is the channel-one half of
        /// the current round (also true while waiting out an off-parity
        /// slot right after a swap or a fresh start).
        next_is_ch1: bool,
        /// A swap-induced wasted slot is pending; consumed in exactly one
        /// slot.
        skip_pending: bool,
    },
}

/// State of a node running the sync-wrapped dynamic protocol on a single
/// channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncNodeState {
    /// Global arrival slot `t_u`.
    pub arrival: u64,
    pub mode: SyncMode,
}

/// What a running node does in a given slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Play {
    Ch1,
    Ch2,
    Idle,
}

impl SyncNodeState {
    pub fn new(arrival: u64) -> Self {
        SyncNodeState {
            arrival,
            mode: SyncMode::Syncing,
        }
    }

    fn play(mode: &SyncMode, slot: u64) -> Play {
        match *mode {
            SyncMode::Syncing => unreachable!("play() is only defined while running"),
            SyncMode::Running {
                ch1_parity,
                next_is_ch1,
                ..
            } => {
                if (slot % 2) as u8 == ch1_parity {
                    Play::Ch1
                } else if next_is_ch1 {
                    Play::Idle
                } else {
                    Play::Ch2
                }
            }
        }
    }

    /// The single-channel send probability for global slot `slot`.
    #[inline]
    pub fn prob(&self, slot: u64, c: f64) -> f64 {
        match self.mode {
            SyncMode::Syncing => {
                // Local index ceil((slot - arrival + 1) / 2) on the
                // matching-parity sub-channel.
                let local = (slot - self.arrival) / 2 + 1;
                BackoffSchedule::LogReciprocal { c }.prob_unchecked(local)
            }
            SyncMode::Running { dynamic, .. } => match Self::play(&self.mode, slot) {
                Play::Ch1 => BackoffSchedule::Reciprocal.prob_unchecked(dynamic.age),
                Play::Ch2 => BackoffSchedule::LogReciprocal { c }.prob_unchecked(dynamic.age),
                Play::Idle => 0.0,
            },
        }
    }

    /// End-of-slot update from the slot's feedback. Returns true if this
    /// slot was a swap-induced wasted slot for this node.
    pub fn update(&mut self, slot: u64, feedback: Feedback, own: NodeId) -> bool {
        let parity = (slot % 2) as u8;
        match &mut self.mode {
            SyncMode::Syncing => {
                if let Feedback::Success(id) = feedback {
                    debug_assert_ne!(id, own, "own success must halt the node first");
                    // The sub-channel containing the success becomes channel
                    // one; the two-channel protocol starts at slot T + 2.
                    self.mode = SyncMode::Running {
                        ch1_parity: parity,
                        dynamic: DynamicNodeState::new(),
                        next_is_ch1: true,
                        skip_pending: false,
                    };
                }
                false
            }
            SyncMode::Running {
                ch1_parity,
                dynamic,
                next_is_ch1,
                skip_pending,
            } => {
                let played = Self::play(
                    &SyncMode::Running {
                        ch1_parity: *ch1_parity,
                        dynamic: *dynamic,
                        next_is_ch1: *next_is_ch1,
                        skip_pending: *skip_pending,
                    },
                    slot,
                );
                let mut wasted = false;
                match played {
                    Play::Ch1 => *next_is_ch1 = false,
                    Play::Ch2 => {
                        dynamic.age += 1;
                        *next_is_ch1 = true;
                    }
                    Play::Idle => {
                        if *skip_pending {
                            *skip_pending = false;
                            wasted = true;
                        }
                    }
                }
                if let Feedback::Success(id) = feedback {
                    debug_assert_ne!(id, own);
                    if parity != *ch1_parity {
                        // Success on the current channel two: swap roles and
                        // waste the next slot (only if we were mid-round).
                        if played == Play::Ch2 {
                            *skip_pending = true;
                        }
                        *ch1_parity = parity;
                        *next_is_ch1 = true;
                    }
                }
                wasted
            }
        }
    }

    /// Diagnostic snapshot of the post-update state.
    pub fn snapshot(&self, wasted: bool) -> SyncSnapshot {
        match self.mode {
            SyncMode::Syncing => SyncSnapshot {
                running: false,
                ch1_parity: None,
                wasted,
            },
            SyncMode::Running { ch1_parity, .. } => SyncSnapshot {
                running: true,
                ch1_parity: Some(ch1_parity),
                wasted,
            },
        }
    }
}

/// The send probability the sync wrapper emits in `slot` for `state`.
pub fn sync_step(state: &SyncNodeState, slot: u64, c: f64) -> f64 {
    state.prob(slot, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = 4.0;

    #[test]
    fn syncing_interleaves_two_sub_channel_schedules() {
        let s = SyncNodeState::new(3);
        let sched = BackoffSchedule::LogReciprocal { c: C };
        // Sub-channels {3,5,7,...} and {4,6,8,...}, both from local index 1.
        assert_eq!(s.prob(3, C), sched.prob_unchecked(1));
        assert_eq!(s.prob(4, C), sched.prob_unchecked(1));
        assert_eq!(s.prob(5, C), sched.prob_unchecked(2));
        assert_eq!(s.prob(6, C), sched.prob_unchecked(2));
        assert_eq!(s.prob(7, C), sched.prob_unchecked(3));
    }

    #[test]
    fn first_heard_success_starts_dynamic_at_t_plus_two() {
        let mut s = SyncNodeState::new(3);
        // Success by node 9 at T = 10 (even parity).
        s.update(10, Feedback::Success(9), 0);
        match s.mode {
            SyncMode::Running {
                ch1_parity,
                dynamic,
                ..
            } => {
                assert_eq!(ch1_parity, 0);
                assert_eq!(dynamic.age, 1);
            }
            _ => panic!("should be running"),
        }
        // Slot 11 is off-parity and pre-round: silent, not counted wasted.
        assert_eq!(s.prob(11, C), 0.0);
        assert!(!s.update(11, Feedback::NoSuccess, 0));
        // Slot 12: channel one, dynamic age 1 => probability 1.
        assert_eq!(s.prob(12, C), 1.0);
    }

    #[test]
    fn channel_two_success_swaps_roles_and_wastes_one_slot() {
        let mut s = SyncNodeState::new(3);
        s.update(10, Feedback::Success(9), 0);
        s.update(11, Feedback::NoSuccess, 0);
        s.update(12, Feedback::NoSuccess, 0); // ch1 of round 1
        assert!(s.prob(13, C) > 0.0); // ch2 of round 1
        // Success heard on channel two at T' = 13.
        s.update(13, Feedback::Success(9), 0);
        match s.mode {
            SyncMode::Running {
                ch1_parity,
                dynamic,
                skip_pending,
                ..
            } => {
                assert_eq!(ch1_parity, 1, "channel one now odd-parity");
                assert_eq!(dynamic.age, 2, "round advanced");
                assert!(skip_pending);
            }
            _ => panic!(),
        }
        // T' + 1 is the wasted slot.
        assert_eq!(s.prob(14, C), 0.0);
        assert!(s.update(14, Feedback::NoSuccess, 0));
        // T' + 2 resumes on channel one with age 2.
        assert_eq!(s.prob(15, C), 0.5);
    }

    #[test]
    fn channel_one_success_does_not_swap() {
        let mut s = SyncNodeState::new(1);
        s.update(10, Feedback::Success(9), 0);
        s.update(11, Feedback::NoSuccess, 0);
        // Success at slot 12 (channel-one parity): roles unchanged.
        s.update(12, Feedback::Success(8), 0);
        match s.mode {
            SyncMode::Running {
                ch1_parity,
                skip_pending,
                ..
            } => {
                assert_eq!(ch1_parity, 0);
                assert!(!skip_pending);
            }
            _ => panic!(),
        }
        // Slot 13 is the channel-two half of the same round.
        assert!(s.prob(13, C) > 0.0);
    }
}
