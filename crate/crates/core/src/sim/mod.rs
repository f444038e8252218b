//! The slot-synchronous execution engine and its domain types.

pub mod engine;
pub mod types;

pub use engine::run_execution;
pub use types::{
    active_slot_count, node_energy, resolve_channel, resolve_slot, ChannelOutcome, ChannelRecord,
    ChannelTruth, ExecutionConfig, ExecutionTrace, Feedback, NodeId, NodeInfo, NodeKind,
    NodeSlotDetail, RecordMode, SlotRecord, SuccessEvent, SyncSnapshot,
};
