//! Backoff schedules and the per-node protocol state machines.
//!
//! Every protocol is a pure per-slot state machine: state and feedback in,
//! new state and per-channel send probabilities out. The engine owns
//! sampling and halting; protocols never see randomness.

pub mod dynamic;
pub mod schedule;
pub mod static_alg;
pub mod sync;

pub use dynamic::{
    dynamic_probs, dynamic_step, plain_backoff_step, DynamicNodeState, InterferenceState,
    PlainBackoffState,
};
pub use schedule::{backoff_prob, BackoffSchedule};
pub use static_alg::{static_phase1_update, static_step, StaticNodeState, StaticPhase};
pub use sync::{sync_step, SyncMode, SyncNodeState};

use serde::{Deserialize, Serialize};

use crate::sim::types::{ChannelOutcome, Feedback, NodeId, SyncSnapshot};
use crate::{Error, Result};

/// Registry of runnable protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolId {
    /// Two-channel dynamic: `Backoff(1/x)` on channel one and
    /// `Backoff((c log x)/x)` on channel two, from arrival.
    Dynamic2,
    /// Single-channel dynamic via the parity synchronization wrapper.
    Dynamic1Sync,
    /// Two-channel static two-phase algorithm (data + control channel).
    Static2,
    /// Static algorithm on one channel via the fixed odd/even mapping.
    Static1,
    /// Baseline: plain `Backoff(1/x)` on a single channel.
    PlainBackoff,
    /// Baseline: `Backoff((c log x)/x)` on a single channel.
    PlainBackoffLog,
}

impl ProtocolId {
    pub fn parse(id: &str) -> Result<Self> {
        match id {
            "dynamic2" => Ok(ProtocolId::Dynamic2),
            "dynamic1-sync" => Ok(ProtocolId::Dynamic1Sync),
            "static2" => Ok(ProtocolId::Static2),
            "static1" => Ok(ProtocolId::Static1),
            "plain-backoff" => Ok(ProtocolId::PlainBackoff),
            "plain-backoff-log" => Ok(ProtocolId::PlainBackoffLog),
            other => Err(Error::UnknownProtocol(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolId::Dynamic2 => "dynamic2",
            ProtocolId::Dynamic1Sync => "dynamic1-sync",
            ProtocolId::Static2 => "static2",
            ProtocolId::Static1 => "static1",
            ProtocolId::PlainBackoff => "plain-backoff",
            ProtocolId::PlainBackoffLog => "plain-backoff-log",
        }
    }

    /// Number of channels the protocol runs on.
    pub fn channels(&self) -> usize {
        match self {
            ProtocolId::Dynamic2 | ProtocolId::Static2 => 2,
            _ => 1,
        }
    }

    /// Static protocols assume all nodes start in slot one.
    pub fn requires_batch_arrival(&self) -> bool {
        matches!(self, ProtocolId::Static2 | ProtocolId::Static1)
    }

    /// All registered ids.
    pub fn all() -> &'static [&'static str] {
        &[
            "dynamic2",
            "dynamic1-sync",
            "static2",
            "static1",
            "plain-backoff",
            "plain-backoff-log",
        ]
    }
}

/// Static protocol mapped onto a single channel: odd global slots carry the
/// data channel, even slots the control channel. No synchronization
/// procedure is needed since all nodes share slot one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticSingleState {
    pub inner: StaticNodeState,
}

impl StaticSingleState {
    fn prob(&self, slot: u64, c: f64) -> f64 {
        let probs = static_step(&self.inner, c);
        if slot % 2 == 1 {
            probs[0]
        } else {
            probs[1]
        }
    }

    fn update(&mut self, slot: u64, feedback: Feedback) -> Result<()> {
        // The state advances once per odd/even pair, after the control slot.
        if slot % 2 == 0 {
            match self.inner.phase {
                StaticPhase::One => self.inner = static_phase1_update(&self.inner, feedback)?,
                StaticPhase::Two => self.inner.phase2_age += 1,
            }
        }
        Ok(())
    }
}

/// Unified per-node protocol state, dispatched by the engine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NodeState {
    Dynamic(DynamicNodeState),
    Static(StaticNodeState),
    StaticSingle(StaticSingleState),
    Sync(SyncNodeState),
    Plain(PlainBackoffState),
    Interference(InterferenceState),
}

impl NodeState {
    /// Initial state for a normal node arriving at `arrival` under `proto`.
    pub fn init(proto: ProtocolId, arrival: u64, c: f64) -> Self {
        match proto {
            ProtocolId::Dynamic2 => NodeState::Dynamic(DynamicNodeState::new()),
            ProtocolId::Static2 => NodeState::Static(StaticNodeState::new()),
            ProtocolId::Static1 => NodeState::StaticSingle(StaticSingleState {
                inner: StaticNodeState::new(),
            }),
            ProtocolId::Dynamic1Sync => NodeState::Sync(SyncNodeState::new(arrival)),
            ProtocolId::PlainBackoff => {
                NodeState::Plain(PlainBackoffState::new(BackoffSchedule::Reciprocal))
            }
            ProtocolId::PlainBackoffLog => {
                NodeState::Plain(PlainBackoffState::new(BackoffSchedule::LogReciprocal { c }))
            }
        }
    }

    /// Per-channel send probabilities for the current slot. Channels beyond
    /// the protocol's count are zero.
    #[inline]
    pub fn probs(&self, slot: u64, c: f64) -> [f64; 2] {
        match self {
            NodeState::Dynamic(s) => dynamic_probs(*s, c),
            NodeState::Static(s) => static_step(s, c),
            NodeState::StaticSingle(s) => [s.prob(slot, c), 0.0],
            NodeState::Sync(s) => [s.prob(slot, c), 0.0],
            NodeState::Plain(s) => [s.prob(), 0.0],
            NodeState::Interference(s) => s.probs(slot, c),
        }
    }

    /// End-of-slot state update from the slot's outcomes. Only called for
    /// nodes that did not halt in this slot. Returns true if this slot was a
    /// sync-wrapper wasted slot for this node.
    pub fn update(&mut self, slot: u64, outcomes: &[ChannelOutcome], own: NodeId) -> Result<bool> {
        match self {
            NodeState::Dynamic(s) => {
                s.age += 1;
                Ok(false)
            }
            NodeState::Static(s) => {
                match s.phase {
                    StaticPhase::One => *s = static_phase1_update(s, outcomes[1].feedback)?,
                    StaticPhase::Two => s.phase2_age += 1,
                }
                Ok(false)
            }
            NodeState::StaticSingle(s) => {
                s.update(slot, outcomes[0].feedback)?;
                Ok(false)
            }
            NodeState::Sync(s) => Ok(s.update(slot, outcomes[0].feedback, own)),
            NodeState::Plain(s) => {
                s.age += 1;
                Ok(false)
            }
            // Interference nodes carry no mutable state; the engine halts
            // them upon any heard success.
            NodeState::Interference(_) => Ok(false),
        }
    }

    /// Diagnostic snapshot for sync-wrapper nodes; `None` for the rest.
    pub fn sync_snapshot(&self, wasted: bool) -> Option<SyncSnapshot> {
        match self {
            NodeState::Sync(s) => Some(s.snapshot(wasted)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::types::ChannelTruth;

    fn outcome(fb: Feedback) -> ChannelOutcome {
        ChannelOutcome {
            truth: match fb {
                Feedback::Success(id) => ChannelTruth::Success(id),
                Feedback::NoSuccess => ChannelTruth::Empty,
            },
            feedback: fb,
        }
    }

    #[test]
    fn registry_round_trips() {
        for id in ProtocolId::all() {
            let p = ProtocolId::parse(id).unwrap();
            assert_eq!(p.as_str(), *id);
        }
        assert!(ProtocolId::parse("nope").is_err());
    }

    #[test]
    fn static_single_odd_even_mapping() {
        let c = 4.0;
        let mut s = NodeState::init(ProtocolId::Static1, 1, c);
        // Slot 1 (odd) is the data channel: l = 1 => probability 1.
        assert_eq!(s.probs(1, c)[0], 1.0);
        s.update(1, &[outcome(Feedback::NoSuccess)], 0).unwrap();
        // Slot 2 (even) is the control channel, still l = 1.
        assert_eq!(s.probs(2, c)[0], 1.0);
        s.update(2, &[outcome(Feedback::NoSuccess)], 0).unwrap();
        // No control success: l = 2 for the next pair.
        match s {
            NodeState::StaticSingle(ss) => {
                assert_eq!(ss.inner.l, 2.0);
                assert_eq!(ss.inner.t, 2);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn dynamic_update_increments_age() {
        let c = 4.0;
        let mut s = NodeState::init(ProtocolId::Dynamic2, 1, c);
        let out = [outcome(Feedback::NoSuccess), outcome(Feedback::NoSuccess)];
        s.update(1, &out, 0).unwrap();
        assert_eq!(s.probs(2, c)[0], 0.5);
    }
}
