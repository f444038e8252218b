//! The slot loop: injection, probability collection, jamming, sampling,
//! channel resolution, feedback delivery, and halting.
//!
//! Each slot proceeds in a fixed order. The adversary commits its jam flags
//! before any send is sampled; its only inputs are the strategy, the seed,
//! and quantities that are deterministic functions of the visible history
//! (in particular the current slot's data-channel contention, which the
//! protocols derive from past feedback alone). Sends are then sampled from
//! counter-based randomness keyed by `(seed, node, slot, channel)`, so a
//! node's coin in a given slot never depends on iteration order.

use crate::adversary::AdversaryRuntime;
use crate::protocols::{NodeState, ProtocolId};
use crate::rng::unit;
use crate::sim::types::{
    resolve_channel, ChannelOutcome, ChannelRecord, ExecutionConfig, ExecutionTrace, NodeId,
    NodeInfo, NodeKind, NodeSlotDetail, RecordMode, SlotRecord, SuccessEvent,
};
use crate::{Error, Result};

/// Run one execution to completion (all normal nodes succeeded) or to the
/// slot cap. Pure in the config: identical configs yield identical traces.
pub fn run_execution(config: &ExecutionConfig) -> Result<ExecutionTrace> {
    config.validate()?;
    let proto = ProtocolId::parse(&config.protocol)?;
    let channels = config.channels()?;
    let adversary = AdversaryRuntime::build(
        &config.adversary,
        config.n,
        config.d,
        channels,
        config.seed,
    )?;
    if proto.requires_batch_arrival() && adversary.last_normal_slot() > 1 {
        return Err(Error::Config(format!(
            "protocol `{}` requires all normal nodes to arrive in slot one",
            config.protocol
        )));
    }
    let budget = config.adversary.effective_budget(config.d);
    let max_slots = config.effective_max_slots();

    let mut states: Vec<NodeState> = Vec::with_capacity(config.n as usize);
    let mut infos: Vec<NodeInfo> = Vec::with_capacity(config.n as usize);
    // Ids of nodes that are injected and have not halted.
    let mut alive: Vec<NodeId> = Vec::new();
    let mut slots: Vec<SlotRecord> = Vec::new();
    let mut success_slots: Vec<SuccessEvent> = Vec::new();
    let mut normals_remaining = config.n as u64;
    let mut active_slots = 0u64;
    let mut jam_units_used = 0u64;
    let mut terminated = false;
    let mut total_slots = 0u64;

    // Reused per-slot buffers.
    let mut probs: Vec<[f64; 2]> = Vec::new();
    let mut senders: [Vec<NodeId>; 2] = [Vec::new(), Vec::new()];

    for slot in 1..=max_slots {
        total_slots = slot;

        // 1. Injections.
        let (new_normals, directives) = adversary.injections(slot);
        let mut injected: Vec<NodeId> = Vec::new();
        for _ in 0..new_normals {
            let id = states.len() as NodeId;
            states.push(NodeState::init(proto, slot, config.c));
            infos.push(NodeInfo {
                kind: NodeKind::Normal,
                arrival: slot,
                halt: None,
                energy: 0,
            });
            alive.push(id);
            injected.push(id);
        }
        for dir in directives {
            let id = states.len() as NodeId;
            states.push(NodeState::Interference(
                crate::protocols::InterferenceState {
                    injected_at: slot,
                    delayed_ch1: dir.delayed_ch1,
                },
            ));
            infos.push(NodeInfo {
                kind: NodeKind::Interference,
                arrival: slot,
                halt: None,
                energy: 0,
            });
            alive.push(id);
            injected.push(id);
        }

        // 2. Send probabilities for every live node.
        probs.clear();
        let mut contention = [0.0f64; 2];
        let mut normal_contention = [0.0f64; 2];
        let mut max_prob = [0.0f64; 2];
        for &id in &alive {
            let p = states[id as usize].probs(slot, config.c);
            for ch in 0..channels {
                contention[ch] += p[ch];
                if infos[id as usize].kind == NodeKind::Normal {
                    normal_contention[ch] += p[ch];
                }
                if p[ch] > max_prob[ch] {
                    max_prob[ch] = p[ch];
                }
            }
            probs.push(p);
        }

        // 3. Jam flags, charged against the budget before sampling.
        let budget_left = budget - jam_units_used;
        let mut jams = adversary.jam_flags(slot, contention[0], budget_left);
        if channels == 1 {
            jams[1] = false;
        }
        let units = jams[0] as u64 + jams[1] as u64;
        if units > budget_left {
            return Err(Error::BudgetExceeded {
                slot,
                attempted: jam_units_used + units,
                budget,
            });
        }
        jam_units_used += units;

        // 4. Sample sends.
        senders[0].clear();
        senders[1].clear();
        let full = config.record == RecordMode::Full;
        let mut detail: Vec<NodeSlotDetail> = Vec::new();
        for (i, &id) in alive.iter().enumerate() {
            let p = probs[i];
            let mut sent = [false, false];
            for ch in 0..channels {
                if p[ch] > 0.0 && unit(config.seed, id as u64, slot, ch as u64) < p[ch] {
                    sent[ch] = true;
                    senders[ch].push(id);
                    infos[id as usize].energy += 1;
                }
            }
            if full {
                detail.push(NodeSlotDetail {
                    node: id,
                    probs: p[..channels].to_vec(),
                    sent: sent[..channels].to_vec(),
                    sync: None,
                });
            }
        }

        // 5. Resolve channels and collect successes.
        let mut outcomes: [ChannelOutcome; 2] = [
            resolve_channel(&senders[0], jams[0]),
            resolve_channel(if channels == 2 { &senders[1] } else { &[] }, false),
        ];
        if channels == 2 {
            outcomes[1] = resolve_channel(&senders[1], jams[1]);
        }
        let mut heard_success = false;
        for ch in 0..channels {
            if let crate::sim::types::ChannelTruth::Success(id) = outcomes[ch].truth {
                heard_success = true;
                success_slots.push(SuccessEvent {
                    slot,
                    node: id,
                    channel: ch,
                });
                // A node can succeed on both channels of one slot; it halts
                // (and counts) once.
                if infos[id as usize].halt.is_none() {
                    infos[id as usize].halt = Some(slot);
                    if infos[id as usize].kind == NodeKind::Normal {
                        normals_remaining -= 1;
                    }
                }
            }
        }

        // 6. Feedback delivery and end-of-slot updates. Interference nodes
        // halt upon hearing any success; successful nodes halt without
        // updating.
        let mut err: Option<Error> = None;
        alive.retain(|&id| {
            if infos[id as usize].halt == Some(slot) {
                return false;
            }
            if err.is_some() {
                return true;
            }
            match &mut states[id as usize] {
                NodeState::Interference(_) => {
                    if heard_success {
                        infos[id as usize].halt = Some(slot);
                        false
                    } else {
                        true
                    }
                }
                state => {
                    let wasted = match state.update(slot, &outcomes[..channels], id) {
                        Ok(w) => w,
                        Err(e) => {
                            err = Some(e);
                            return true;
                        }
                    };
                    if full && wasted {
                        if let Some(d) = detail.iter_mut().find(|d| d.node == id) {
                            d.sync = state.sync_snapshot(true);
                        }
                    }
                    true
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if full {
            for d in detail.iter_mut() {
                if d.sync.is_none() {
                    d.sync = states[d.node as usize].sync_snapshot(false);
                }
            }
        }

        // 7. Record.
        let active_count = (alive.len()
            + infos.iter().filter(|n| n.halt == Some(slot)).count()) as u64;
        if active_count >= 1 {
            active_slots += 1;
        }
        if config.record != RecordMode::Counters {
            let channel_records = (0..channels)
                .map(|ch| ChannelRecord {
                    jammed: jams[ch],
                    truth: outcomes[ch].truth,
                    feedback: outcomes[ch].feedback,
                    contention: contention[ch],
                    normal_contention: normal_contention[ch],
                    max_prob: max_prob[ch],
                })
                .collect();
            slots.push(SlotRecord {
                slot,
                channels: channel_records,
                injections: injected,
                active_count,
                detail: if full { Some(detail) } else { None },
            });
        }

        // 8. Termination: every normal node has succeeded and none remain
        // to be injected.
        if normals_remaining == 0 && slot >= adversary.last_normal_slot() {
            terminated = true;
            break;
        }
    }

    Ok(ExecutionTrace {
        config: config.clone(),
        slots,
        nodes: infos,
        success_slots,
        active_slots,
        jam_units_used,
        terminated,
        reached_max_slots: !terminated && total_slots == max_slots,
        total_slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversarySpec, InjectionRule, InterferenceDirective, JamRule};
    use crate::sim::types::ChannelTruth;

    fn config(protocol: &str, adversary: AdversarySpec, n: u32, d: u64, seed: u64) -> ExecutionConfig {
        ExecutionConfig::new(protocol, adversary, n, d, seed)
    }

    #[test]
    fn lone_node_no_jamming_succeeds_in_slot_one() {
        let trace =
            run_execution(&config("plain-backoff", AdversarySpec::default(), 1, 0, 1)).unwrap();
        assert!(trace.terminated);
        assert_eq!(trace.total_slots, 1);
        assert_eq!(trace.success_slots.len(), 1);
        assert_eq!(trace.success_slots[0].slot, 1);
        assert_eq!(trace.nodes[0].halt, Some(1));
        assert_eq!(trace.nodes[0].energy, 1);
        assert_eq!(trace.active_slots, 1);
    }

    #[test]
    fn front_jam_delays_lone_log_backoff_node_to_slot_four() {
        // The aggressive schedule keeps a fresh node at probability one well
        // past slot four, so with d = 3 the first success lands exactly at
        // slot four and all three budget units are spent.
        let spec = AdversarySpec {
            jam: JamRule::Front,
            ..Default::default()
        };
        let trace = run_execution(&config("plain-backoff-log", spec, 1, 3, 42)).unwrap();
        assert!(trace.terminated);
        assert_eq!(trace.success_slots[0].slot, 4);
        assert_eq!(trace.jam_units_used, 3);
        for rec in &trace.slots[..3] {
            assert_eq!(rec.channels[0].truth, ChannelTruth::Jammed);
        }
    }

    #[test]
    fn identical_configs_yield_identical_traces() {
        let cfg = config("dynamic2", AdversarySpec::from_id("front", 5, 6).unwrap(), 5, 6, 9);
        let a = run_execution(&cfg).unwrap();
        let b = run_execution(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn explicit_jam_slots_beyond_budget_abort() {
        let spec = AdversarySpec {
            jam: JamRule::Slots(vec![1, 2, 3]),
            ..Default::default()
        };
        let err = run_execution(&config("plain-backoff", spec, 1, 2, 7)).unwrap_err();
        match err {
            Error::BudgetExceeded { slot, attempted, budget } => {
                assert_eq!(slot, 3);
                assert_eq!(attempted, 3);
                assert_eq!(budget, 2);
            }
            other => panic!("expected budget error, got {other}"),
        }
    }

    #[test]
    fn max_slots_cap_flags_unfinished_runs() {
        // Two nodes stuck at probability one forever (huge c) collide in
        // every slot; the run must stop at the cap.
        let mut cfg = config("plain-backoff-log", AdversarySpec::default(), 2, 0, 3);
        cfg.c = 1e9;
        cfg.max_slots = Some(50);
        let trace = run_execution(&cfg).unwrap();
        assert!(!trace.terminated);
        assert!(trace.reached_max_slots);
        assert_eq!(trace.total_slots, 50);
        assert!(trace.success_slots.is_empty());
    }

    #[test]
    fn interference_nodes_halt_on_first_success() {
        let spec = AdversarySpec {
            interference: vec![
                InterferenceDirective { slot: 1, delayed_ch1: false },
                InterferenceDirective { slot: 1, delayed_ch1: true },
            ],
            ..Default::default()
        };
        let trace = run_execution(&config("dynamic2", spec, 2, 0, 11)).unwrap();
        assert!(trace.terminated);
        let first = trace.success_slots[0].slot;
        for info in trace.nodes.iter().filter(|i| i.kind == NodeKind::Interference) {
            assert_eq!(info.halt, Some(first));
        }
    }

    #[test]
    fn static_protocols_reject_scattered_arrivals() {
        let spec = AdversarySpec {
            injection: InjectionRule::Scattered { window: 16 },
            ..Default::default()
        };
        assert!(run_execution(&config("static2", spec, 4, 0, 1)).is_err());
    }

    #[test]
    fn jam_units_never_exceed_budget() {
        for seed in 0..5 {
            let spec = AdversarySpec::from_id("band-jam", 4, 3).unwrap();
            let trace = run_execution(&config("dynamic2", spec, 4, 3, seed)).unwrap();
            assert!(trace.jam_units_used <= 3);
        }
    }

    #[test]
    fn full_record_mode_captures_per_node_detail() {
        let mut cfg = config("dynamic2", AdversarySpec::default(), 2, 0, 5);
        cfg.record = RecordMode::Full;
        let trace = run_execution(&cfg).unwrap();
        let first = &trace.slots[0];
        let detail = first.detail.as_ref().unwrap();
        assert_eq!(detail.len(), 2);
        assert_eq!(detail[0].probs, vec![1.0, 1.0]);
        assert!(detail[0].sent.iter().all(|&s| s));
    }

    #[test]
    fn counters_mode_keeps_no_slot_records() {
        let mut cfg = config("dynamic2", AdversarySpec::default(), 3, 0, 5);
        cfg.record = RecordMode::Counters;
        let trace = run_execution(&cfg).unwrap();
        assert!(trace.slots.is_empty());
        assert!(trace.active_slots >= 1);
        assert_eq!(crate::sim::types::active_slot_count(&trace), trace.active_slots);
    }
}
