//! Slot-synchronous simulator and analysis harness for robust contention
//! resolution on a multiple-access channel without collision detection.
//!
//! The crate has five layers:
//!
//! - [`sim`]: the execution engine. Resolves each slot's channel outcome from
//!   the set of senders and the adversary's jam flags, drives protocol and
//!   adversary callbacks, and records a full trace.
//! - [`protocols`]: backoff schedules and the per-node protocol state
//!   machines (two-channel dynamic, two-phase static, the single-channel
//!   synchronization wrapper, and plain backoff baselines).
//! - [`adversary`]: injection schedules, jamming rules under a hard budget,
//!   interference nodes, and the explicit lower-bound constructions.
//! - [`analysis`]: exact contention-to-success probability math, congest-slot
//!   classification, and interval decompositions over completed traces.
//! - [`harness`]: trial sweeps, aggregation, and complexity-constant fitting.
//!
//! Everything is deterministic: an execution is a pure function of its
//! [`sim::ExecutionConfig`] (which embeds a 64-bit seed).

pub mod adversary;
pub mod analysis;
pub mod harness;
pub mod protocols;
pub mod rng;
pub mod sim;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("jamming budget exceeded at slot {slot}: would use {attempted} units, budget {budget}")]
    BudgetExceeded {
        slot: u64,
        attempted: u64,
        budget: u64,
    },
    #[error("unknown node id {0}")]
    UnknownNode(u32),
    #[error("unknown protocol id `{0}`")]
    UnknownProtocol(String),
    #[error("unknown adversary id `{0}`")]
    UnknownAdversary(String),
    #[error("slot {0} out of range")]
    SlotOutOfRange(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
