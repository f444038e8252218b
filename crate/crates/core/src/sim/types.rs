//! Core domain types: channel outcomes, slot records, traces, and the
//! execution configuration.

use serde::{Deserialize, Serialize};

use crate::adversary::AdversarySpec;
use crate::{Error, Result};

/// Node identifier; assigned in injection order, starting from 0.
pub type NodeId = u32;

/// What actually happened on one channel in one slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelTruth {
    /// No node sent.
    Empty,
    /// Exactly one node sent and the slot was not jammed.
    Success(NodeId),
    /// Two or more nodes sent and the slot was not jammed.
    Collision,
    /// The adversary jammed the channel; reported regardless of sender count.
    Jammed,
}

/// Binary feedback delivered to every node. There is no collision detection:
/// anything other than a success is indistinguishable from silence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feedback {
    Success(NodeId),
    NoSuccess,
}

impl ChannelTruth {
    /// The binary feedback corresponding to this truth.
    pub fn feedback(&self) -> Feedback {
        match *self {
            ChannelTruth::Success(id) => Feedback::Success(id),
            _ => Feedback::NoSuccess,
        }
    }
}

/// Outcome of one channel in one slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelOutcome {
    pub truth: ChannelTruth,
    pub feedback: Feedback,
}

/// Resolve a single channel from its realized sender set and jam flag.
///
/// Jam wins over everything; otherwise the outcome is determined by the
/// number of senders. Total on valid inputs.
pub fn resolve_channel(senders: &[NodeId], jam: bool) -> ChannelOutcome {
    let truth = if jam {
        ChannelTruth::Jammed
    } else {
        match senders {
            [] => ChannelTruth::Empty,
            [only] => ChannelTruth::Success(*only),
            _ => ChannelTruth::Collision,
        }
    };
    ChannelOutcome {
        truth,
        feedback: truth.feedback(),
    }
}

/// Resolve every channel of a slot independently.
pub fn resolve_slot(sends: &[&[NodeId]], jams: &[bool]) -> Vec<ChannelOutcome> {
    debug_assert_eq!(sends.len(), jams.len());
    sends
        .iter()
        .zip(jams)
        .map(|(s, &j)| resolve_channel(s, j))
        .collect()
}

/// Per-channel aggregate stats recorded every slot (cheap even for long
/// executions; the per-node detail is gated behind [`RecordMode::Full`]).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub jammed: bool,
    pub truth: ChannelTruth,
    pub feedback: Feedback,
    /// Sum of recorded send probabilities of all active nodes.
    pub contention: f64,
    /// Sum of recorded send probabilities of normal nodes only.
    pub normal_contention: f64,
    /// Largest single-node send probability on this channel.
    pub max_prob: f64,
}

/// Sync-wrapper bookkeeping snapshot, recorded post-update for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncSnapshot {
    pub running: bool,
    /// Parity (`slot % 2`) of the slots this node currently treats as
    /// channel one; `None` while still synchronizing.
    pub ch1_parity: Option<u8>,
    /// True if this node consumed a swap-induced wasted slot here.
    pub wasted: bool,
}

/// Full per-node record of one slot (recorded only in [`RecordMode::Full`]).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeSlotDetail {
    pub node: NodeId,
    /// Send probability emitted by the protocol, per channel, before sampling.
    pub probs: Vec<f64>,
    /// Realized send flags, per channel.
    pub sent: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sync: Option<SyncSnapshot>,
}

/// One slot of an execution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlotRecord {
    /// 1-based global slot index.
    pub slot: u64,
    pub channels: Vec<ChannelRecord>,
    /// Node ids injected at the start of this slot.
    pub injections: Vec<NodeId>,
    /// Number of nodes (normal + interference) active during this slot.
    pub active_count: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<Vec<NodeSlotDetail>>,
}

/// Whether a node was injected by the protocol side or as adversarial
/// interference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Normal,
    Interference,
}

/// Lifetime and energy of one node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeInfo {
    pub kind: NodeKind,
    /// Slot the node was injected in (it may send in this slot).
    pub arrival: u64,
    /// Slot of the node's own success (normal) or of the success it heard
    /// (interference); `None` if still active when the execution ended.
    pub halt: Option<u64>,
    /// Total realized sends over all slots and channels.
    pub energy: u64,
}

/// A success event: `node` succeeded on `channel` in `slot`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessEvent {
    pub slot: u64,
    pub node: NodeId,
    pub channel: usize,
}

/// How much of an execution to keep in memory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    /// Aggregates only; no per-slot records. Used by large sweeps.
    Counters,
    /// Per-slot channel aggregates (contention, truth, jam flags).
    #[default]
    Slots,
    /// Per-slot and per-node probabilities and send flags.
    Full,
}

/// Configuration of a single execution. An execution is a pure function of
/// this value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionConfig {
    /// Number of normal nodes the adversary injects.
    pub n: u32,
    /// Jamming budget, in units of one channel-slot each.
    pub d: u64,
    /// Schedule constant for the `(c*log x)/x` family.
    #[serde(default = "default_c")]
    pub c: f64,
    /// 1 or 2; must match the protocol. Defaults to the protocol's count.
    #[serde(default)]
    pub channel_count: Option<usize>,
    /// Safety cap on the slot loop. Defaults to `10^6 * (n + d + 1)`.
    #[serde(default)]
    pub max_slots: Option<u64>,
    /// Protocol registry id.
    pub protocol: String,
    pub adversary: AdversarySpec,
    pub seed: u64,
    #[serde(default)]
    pub record: RecordMode,
}

fn default_c() -> f64 {
    4.0
}

impl ExecutionConfig {
    /// A config with registry defaults for the given protocol and adversary.
    pub fn new(protocol: &str, adversary: AdversarySpec, n: u32, d: u64, seed: u64) -> Self {
        ExecutionConfig {
            n,
            d,
            c: default_c(),
            channel_count: None,
            max_slots: None,
            protocol: protocol.to_string(),
            adversary,
            seed,
            record: RecordMode::default(),
        }
    }

    /// Effective channel count (explicit or derived from the protocol).
    pub fn channels(&self) -> Result<usize> {
        let proto = crate::protocols::ProtocolId::parse(&self.protocol)?;
        match self.channel_count {
            None => Ok(proto.channels()),
            Some(k) if k == proto.channels() => Ok(k),
            Some(k) => Err(Error::Config(format!(
                "channel_count {k} does not match protocol `{}` ({} channels)",
                self.protocol,
                proto.channels()
            ))),
        }
    }

    /// Effective slot cap.
    pub fn effective_max_slots(&self) -> u64 {
        self.max_slots
            .unwrap_or_else(|| 1_000_000u64.saturating_mul(self.n as u64 + self.d + 1))
    }

    /// Validate all invariants; called by the engine before running.
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config("c must be > 0".into()));
        }
        if self.effective_max_slots() < 1 {
            return Err(Error::Config("max_slots must be >= 1".into()));
        }
        let channels = self.channels()?;
        self.adversary.validate(self.n, self.d, channels)?;
        Ok(())
    }
}

/// Complete record of one execution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub config: ExecutionConfig,
    /// Per-slot records; empty in [`RecordMode::Counters`].
    pub slots: Vec<SlotRecord>,
    /// All nodes in injection order (index = id).
    pub nodes: Vec<NodeInfo>,
    pub success_slots: Vec<SuccessEvent>,
    /// Number of slots with at least one active node.
    pub active_slots: u64,
    pub jam_units_used: u64,
    /// True if all `n` normal nodes succeeded before the slot cap.
    pub terminated: bool,
    pub reached_max_slots: bool,
    /// Total number of slots the engine stepped through.
    pub total_slots: u64,
}

impl ExecutionTrace {
    /// Seed this trace was produced with.
    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Channel count of this trace.
    pub fn channels(&self) -> usize {
        self.config.channels().unwrap_or(1)
    }
}

/// Number of slots in which at least one node (normal or interference) was
/// active. Uses the per-slot records when present, otherwise the counter
/// accumulated during the run.
pub fn active_slot_count(trace: &ExecutionTrace) -> u64 {
    if trace.slots.is_empty() {
        trace.active_slots
    } else {
        trace.slots.iter().filter(|s| s.active_count >= 1).count() as u64
    }
}

/// Total realized sends by `node`, summed over slots and channels. A
/// simultaneous send on both channels in one slot costs two.
pub fn node_energy(trace: &ExecutionTrace, node: NodeId) -> Result<u64> {
    trace
        .nodes
        .get(node as usize)
        .map(|info| info.energy)
        .ok_or(Error::UnknownNode(node))
}
