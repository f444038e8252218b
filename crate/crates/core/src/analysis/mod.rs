//! Exact probability math, contention reporting, congest-slot
//! classification, and interval decompositions over completed traces.

use serde::{Deserialize, Serialize};

use crate::protocols::{static_phase1_update, StaticNodeState, StaticPhase};
use crate::sim::types::{ChannelTruth, ExecutionTrace, NodeKind};
use crate::{Error, Result};

/// Tolerance used when checking the analytic bounds: a bound "holds" if it
/// is violated by no more than this.
const BOUND_EPS: f64 = 1e-9;

/// Exactly one success / exactly zero senders, given independent send
/// probabilities. Computed with a single stable forward recurrence over
/// `(P[no sender yet], P[exactly one sender yet])`.
pub fn exact_success_probs(probs: &[f64]) -> Result<(f64, f64)> {
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidArgument(
            "probabilities must lie in [0, 1]".into(),
        ));
    }
    let mut zero = 1.0f64;
    let mut one = 0.0f64;
    for &p in probs {
        one = one * (1.0 - p) + zero * p;
        zero *= 1.0 - p;
    }
    Ok((one, zero))
}

/// Bound check for one probability vector: with `p = sum(p_i)`,
/// if all `p_i <= 1/2` then `P_one >= min(4^-p, p/4)` and `P_zero >= 4^-p`;
/// unconditionally `P_one <= p * e^(1-p)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub p: f64,
    pub p_one: f64,
    pub p_zero: f64,
    /// Lower bounds; present only when every `p_i <= 1/2`.
    pub lower_one: Option<f64>,
    pub lower_zero: Option<f64>,
    pub upper_one: f64,
    pub holds: bool,
}

pub fn check_lemma21(probs: &[f64]) -> Result<BoundReport> {
    let (p_one, p_zero) = exact_success_probs(probs)?;
    let p: f64 = probs.iter().sum();
    let upper_one = p * (1.0 - p).exp();
    let all_small = probs.iter().all(|&pi| pi <= 0.5);
    let (lower_one, lower_zero) = if all_small {
        let four_pow = 4.0f64.powf(-p);
        (Some(four_pow.min(p / 4.0)), Some(four_pow))
    } else {
        (None, None)
    };
    let mut holds = p_one <= upper_one + BOUND_EPS;
    if let Some(lo) = lower_one {
        holds &= p_one >= lo - BOUND_EPS;
    }
    if let Some(lo) = lower_zero {
        holds &= p_zero >= lo - BOUND_EPS;
    }
    Ok(BoundReport {
        p,
        p_one,
        p_zero,
        lower_one,
        lower_zero,
        upper_one,
        holds,
    })
}

/// Contention of one channel in one slot, with the per-node breakdown when
/// the trace recorded it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContentionReport {
    pub slot: u64,
    pub channel: usize,
    /// Sum of send probabilities of all active nodes (normal + interference).
    pub p: f64,
    /// Per-node probabilities; present only for traces with full detail.
    pub per_node: Option<Vec<f64>>,
}

pub fn slot_contention(trace: &ExecutionTrace, slot: u64, channel: usize) -> Result<ContentionReport> {
    let rec = trace
        .slots
        .iter()
        .find(|r| r.slot == slot)
        .ok_or(Error::SlotOutOfRange(slot))?;
    let ch = rec
        .channels
        .get(channel)
        .ok_or_else(|| Error::InvalidArgument(format!("channel {channel} out of range")))?;
    let per_node = rec
        .detail
        .as_ref()
        .map(|d| d.iter().map(|nd| nd.probs[channel]).collect::<Vec<_>>());
    Ok(ContentionReport {
        slot,
        channel,
        p: ch.contention,
        per_node,
    })
}

/// Which congest-slot definition to apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CongestMode {
    /// Channel one jammed, or normal-node contention on channel one at
    /// least 1, or some node sending with probability at least 1/2.
    Dynamic,
    /// Either channel jammed, or data-channel contention at least `1/c^2`.
    Static,
}

fn require_slot_records(trace: &ExecutionTrace) -> Result<()> {
    if trace.slots.is_empty() && trace.total_slots > 0 {
        return Err(Error::Analysis(
            "trace was recorded in counters mode; per-slot analysis unavailable".into(),
        ));
    }
    Ok(())
}

fn slot_is_congest(rec: &crate::sim::types::SlotRecord, mode: CongestMode, c: f64) -> bool {
    match mode {
        CongestMode::Dynamic => {
            rec.channels[0].jammed
                || rec.channels[0].normal_contention >= 1.0
                || rec.channels.iter().any(|ch| ch.max_prob >= 0.5)
        }
        CongestMode::Static => {
            rec.channels.iter().any(|ch| ch.jammed)
                || rec.channels[0].contention >= 1.0 / (c * c)
        }
    }
}

/// All congest slots of a completed trace under the given definition.
/// The mode must match the protocol family the trace was produced by.
pub fn congest_slots(trace: &ExecutionTrace, mode: CongestMode) -> Result<Vec<u64>> {
    require_slot_records(trace)?;
    let proto = crate::protocols::ProtocolId::parse(&trace.config.protocol)?;
    let is_static = proto.requires_batch_arrival();
    match mode {
        CongestMode::Dynamic if is_static => {
            return Err(Error::Analysis(
                "dynamic congest definition applied to a static-protocol trace".into(),
            ))
        }
        CongestMode::Static if !is_static => {
            return Err(Error::Analysis(
                "static congest definition applied to a dynamic-protocol trace".into(),
            ))
        }
        _ => {}
    }
    let c = trace.config.c;
    Ok(trace
        .slots
        .iter()
        .filter(|r| slot_is_congest(r, mode, c))
        .map(|r| r.slot)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompositionKind {
    /// Intervals anchored at interference injections, closed by the next
    /// success on any channel.
    Interference,
    /// Unions of node active intervals, chained from the first active slot
    /// after the previous interval.
    CompleteDynamic,
    /// Phase-one partition between consecutive control-channel successes,
    /// with the per-interval drop in the shared control variable.
    CompleteStatic,
}

/// One interval of a decomposition with its amortization counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Interval {
    pub l: u64,
    pub r: u64,
    /// Nodes injected within `[l, r]` (interference nodes for the
    /// interference decomposition, all nodes otherwise).
    pub injected: u64,
    /// Congest slots within `[l, r]`.
    pub congest: u64,
    /// Drop of the shared control variable over the interval; static only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta_l: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalDecomposition {
    pub kind: DecompositionKind,
    pub intervals: Vec<Interval>,
}

/// Decompose a completed trace into intervals of the requested kind.
pub fn decompose_intervals(
    trace: &ExecutionTrace,
    kind: DecompositionKind,
) -> Result<IntervalDecomposition> {
    require_slot_records(trace)?;
    let intervals = match kind {
        DecompositionKind::Interference => interference_intervals(trace)?,
        DecompositionKind::CompleteDynamic => complete_dynamic_intervals(trace)?,
        DecompositionKind::CompleteStatic => complete_static_intervals(trace)?,
    };
    Ok(IntervalDecomposition { kind, intervals })
}

fn count_in(sorted: &[u64], l: u64, r: u64) -> u64 {
    sorted.iter().filter(|&&s| s >= l && s <= r).count() as u64
}

fn interference_intervals(trace: &ExecutionTrace) -> Result<Vec<Interval>> {
    let congest = congest_slots(trace, CongestMode::Dynamic).unwrap_or_default();
    let mut inj_slots: Vec<u64> = trace
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Interference)
        .map(|n| n.arrival)
        .collect();
    inj_slots.sort_unstable();
    let mut successes: Vec<u64> = trace.success_slots.iter().map(|e| e.slot).collect();
    successes.sort_unstable();

    let mut intervals = Vec::new();
    let mut prev_r = 0u64;
    loop {
        let Some(&l) = inj_slots.iter().find(|&&s| s > prev_r) else {
            break;
        };
        let r = successes
            .iter()
            .copied()
            .find(|&s| s >= l)
            .unwrap_or(trace.total_slots);
        intervals.push(Interval {
            l,
            r,
            injected: count_in(&inj_slots, l, r),
            congest: count_in(&congest, l, r),
            delta_l: None,
        });
        if r <= prev_r {
            break; // open final interval; nothing further to anchor
        }
        prev_r = r;
    }
    Ok(intervals)
}

fn complete_dynamic_intervals(trace: &ExecutionTrace) -> Result<Vec<Interval>> {
    let congest = congest_slots(trace, CongestMode::Dynamic).unwrap_or_default();
    // Active interval per node: [arrival, halt] (end of trace if unhalted).
    let spans: Vec<(u64, u64)> = trace
        .nodes
        .iter()
        .map(|n| (n.arrival, n.halt.unwrap_or(trace.total_slots)))
        .collect();
    let mut arrivals: Vec<u64> = spans.iter().map(|s| s.0).collect();
    arrivals.sort_unstable();

    let mut intervals = Vec::new();
    let mut prev_r = 0u64;
    loop {
        // First active slot after the previous interval.
        let Some(o) = spans
            .iter()
            .filter(|&&(a, _)| a > prev_r)
            .map(|&(a, _)| a)
            .chain(
                spans
                    .iter()
                    .filter(|&&(a, h)| a <= prev_r && h > prev_r)
                    .map(|_| prev_r + 1),
            )
            .min()
        else {
            break;
        };
        if o > trace.total_slots {
            break;
        }
        let touching: Vec<&(u64, u64)> =
            spans.iter().filter(|&&(a, h)| a <= o && h >= o).collect();
        if touching.is_empty() {
            break;
        }
        let l = touching.iter().map(|s| s.0).min().unwrap();
        let r = touching.iter().map(|s| s.1).max().unwrap();
        intervals.push(Interval {
            l,
            r,
            injected: count_in(&arrivals, l, r),
            congest: count_in(&congest, l, r),
            delta_l: None,
        });
        if r <= prev_r {
            break;
        }
        prev_r = r;
    }
    Ok(intervals)
}

/// Replay of the shared phase-one control variable. All nodes of the static
/// protocol arrive in slot one with identical state and see the same control
/// feedback, so one replayed state tracks every still-active node.
fn replay_shared_static(trace: &ExecutionTrace) -> Result<Vec<(u64, f64, StaticPhase)>> {
    let proto = crate::protocols::ProtocolId::parse(&trace.config.protocol)?;
    if !proto.requires_batch_arrival() {
        return Err(Error::Analysis(
            "static decomposition requires a static-protocol trace".into(),
        ));
    }
    let two_channel = proto.channels() == 2;
    let mut state = StaticNodeState::new();
    let mut timeline = Vec::with_capacity(trace.slots.len());
    for rec in &trace.slots {
        timeline.push((rec.slot, state.l, state.phase));
        if state.phase == StaticPhase::Two {
            continue;
        }
        // Control feedback: channel two natively, even slots in the
        // single-channel mapping (state advances once per odd/even pair).
        let feedback = if two_channel {
            rec.channels[1].feedback
        } else if rec.slot % 2 == 0 {
            rec.channels[0].feedback
        } else {
            continue;
        };
        state = static_phase1_update(&state, feedback)?;
    }
    Ok(timeline)
}

fn complete_static_intervals(trace: &ExecutionTrace) -> Result<Vec<Interval>> {
    let congest = congest_slots(trace, CongestMode::Static)?;
    let timeline = replay_shared_static(trace)?;
    let l_at = |slot: u64| -> f64 {
        timeline
            .iter()
            .find(|&&(s, _, _)| s == slot)
            .map(|&(_, l, _)| l)
            .unwrap_or(1.0)
    };
    // Phase one ends at the first replayed phase-II slot (or trace end).
    let phase_one_end = timeline
        .iter()
        .find(|&&(_, _, ph)| ph == StaticPhase::Two)
        .map(|&(s, _, _)| s.saturating_sub(1))
        .unwrap_or(trace.total_slots);

    let proto = crate::protocols::ProtocolId::parse(&trace.config.protocol)?;
    let control_ch = if proto.channels() == 2 { 1 } else { 0 };
    let mut control_successes: Vec<u64> = trace
        .slots
        .iter()
        .filter(|r| {
            r.slot <= phase_one_end
                && matches!(r.channels[control_ch].truth, ChannelTruth::Success(_))
                && (proto.channels() == 2 || r.slot % 2 == 0)
        })
        .map(|r| r.slot)
        .collect();
    control_successes.sort_unstable();

    let arrivals: Vec<u64> = {
        let mut a: Vec<u64> = trace.nodes.iter().map(|n| n.arrival).collect();
        a.sort_unstable();
        a
    };
    let mut intervals = Vec::new();
    let mut start = 1u64;
    for &s in control_successes.iter().chain(
        (control_successes.last().copied().unwrap_or(0) < phase_one_end)
            .then_some(&phase_one_end),
    ) {
        if s < start {
            continue;
        }
        let end_l = l_at((s + 1).min(phase_one_end.max(1)));
        intervals.push(Interval {
            l: start,
            r: s,
            injected: count_in(&arrivals, start, s),
            congest: count_in(&congest, start, s),
            delta_l: Some(l_at(start) - end_l),
        });
        start = s + 1;
    }
    Ok(intervals)
}
