//! Property-based invariants of the probability math, the schedules, the
//! engine, and the trace decompositions.

use proptest::prelude::*;

use contention_bench::adversary::{lower_bound_jam_plan, AdversarySpec};
use contention_bench::analysis::{
    check_lemma21, decompose_intervals, exact_success_probs, DecompositionKind,
};
use contention_bench::protocols::{
    static_phase1_update, BackoffSchedule, StaticNodeState, StaticPhase,
};
use contention_bench::sim::types::{resolve_channel, ChannelTruth, ExecutionConfig, Feedback, RecordMode};
use contention_bench::sim::run_execution;

proptest! {
    #[test]
    fn schedules_emit_probabilities(x in 1u64..=1_000_000, c in 0.01f64..=64.0) {
        for sched in [BackoffSchedule::Reciprocal, BackoffSchedule::LogReciprocal { c }] {
            let p = sched.prob_unchecked(x);
            prop_assert!((0.0..=1.0).contains(&p), "{sched:?} at {x} gave {p}");
        }
    }

    #[test]
    fn success_bounds_hold_everywhere(probs in proptest::collection::vec(0.0f64..=0.5, 0..20)) {
        let rep = check_lemma21(&probs).unwrap();
        prop_assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn upper_bound_holds_unrestricted(probs in proptest::collection::vec(0.0f64..=1.0, 0..20)) {
        let rep = check_lemma21(&probs).unwrap();
        prop_assert!(rep.p_one <= rep.upper_one + 1e-9, "{rep:?}");
    }

    #[test]
    fn exact_probs_are_probabilities(probs in proptest::collection::vec(0.0f64..=1.0, 0..20)) {
        let (one, zero) = exact_success_probs(&probs).unwrap();
        prop_assert!((0.0..=1.0).contains(&one));
        prop_assert!((0.0..=1.0).contains(&zero));
        prop_assert!(one + zero <= 1.0 + 1e-12);
    }

    #[test]
    fn feedback_is_success_iff_truth_is(senders in proptest::collection::vec(0u32..100, 0..5), jam: bool) {
        let out = resolve_channel(&senders, jam);
        match out.truth {
            ChannelTruth::Success(id) => prop_assert_eq!(out.feedback, Feedback::Success(id)),
            _ => prop_assert_eq!(out.feedback, Feedback::NoSuccess),
        }
    }

    #[test]
    fn static_control_variable_stays_sane(
        feedbacks in proptest::collection::vec(any::<bool>(), 1..200)
    ) {
        let mut s = StaticNodeState::new();
        let mut prev_m = f64::INFINITY;
        for good in feedbacks {
            if s.phase == StaticPhase::Two {
                break;
            }
            let fb = if good { Feedback::Success(0) } else { Feedback::NoSuccess };
            s = static_phase1_update(&s, fb).unwrap();
            prop_assert!(s.l >= 1.0);
            if let Some(m) = s.m {
                prop_assert!(m <= prev_m, "m must be non-increasing");
                prev_m = m;
            }
        }
    }

    #[test]
    fn jam_plan_is_within_horizon_and_budgeted(t in 8u64..2000, big_c in 2.0f64..8.0, seed: u64) {
        prop_assume!((t as f64) >= 4.0 * big_c);
        let plan = lower_bound_jam_plan(t, big_c, seed).unwrap();
        let k = (t as f64 / (4.0 * big_c)).floor() as u64;
        prop_assert_eq!(plan.len() as u64, 2 * k);
        prop_assert!(plan.iter().all(|&s| (1..=t).contains(&s)));
        for s in 1..=k {
            prop_assert!(plan.contains(&s));
        }
    }

    #[test]
    fn executions_are_deterministic_and_budgeted(
        n in 1u32..24,
        d in 0u64..16,
        seed in 0u64..1000,
        proto_idx in 0usize..4,
        adv_idx in 0usize..4,
    ) {
        let protocol = ["dynamic2", "dynamic1-sync", "plain-backoff", "plain-backoff-log"][proto_idx];
        let adversary = ["none", "front", "lb-jam", "band-jam"][adv_idx];
        let spec = AdversarySpec::from_id(adversary, n, d).unwrap();
        let cfg = ExecutionConfig::new(protocol, spec, n, d, seed);
        let a = run_execution(&cfg).unwrap();
        let b = run_execution(&cfg).unwrap();
        prop_assert!(a.jam_units_used <= d);
        prop_assert!(a.terminated);
        prop_assert_eq!(a.success_slots.len() >= n as usize, true);
        prop_assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        // Jammed slots never carry a success.
        for rec in &a.slots {
            for ch in &rec.channels {
                if ch.jammed {
                    prop_assert!(!matches!(ch.truth, ChannelTruth::Success(_)));
                }
            }
        }
    }

    #[test]
    fn complete_dynamic_intervals_alternate_disjointly(n in 1u32..16, seed in 0u64..500) {
        let spec = AdversarySpec::from_id("sqrt-inject", n, 0).unwrap();
        let cfg = ExecutionConfig::new("dynamic2", spec, n, 0, seed);
        let trace = run_execution(&cfg).unwrap();
        let d = decompose_intervals(&trace, DecompositionKind::CompleteDynamic).unwrap();
        for parity in 0..2 {
            let same: Vec<_> = d.intervals.iter().skip(parity).step_by(2).collect();
            for w in same.windows(2) {
                prop_assert!(w[0].r < w[1].l, "same-parity intervals overlap: {:?}", d.intervals);
            }
        }
    }

    #[test]
    fn interference_intervals_are_disjoint(
        n in 2u32..12,
        inj in proptest::collection::btree_set(1u64..40, 1..4),
        seed in 0u64..200,
    ) {
        let spec = AdversarySpec {
            interference: inj
                .iter()
                .map(|&slot| contention_bench::adversary::InterferenceDirective {
                    slot,
                    delayed_ch1: slot % 2 == 0,
                })
                .collect(),
            ..Default::default()
        };
        prop_assume!(spec.interference.len() <= n as usize);
        let cfg = ExecutionConfig::new("dynamic2", spec, n, 0, seed);
        let trace = run_execution(&cfg).unwrap();
        let d = decompose_intervals(&trace, DecompositionKind::Interference).unwrap();
        for w in d.intervals.windows(2) {
            prop_assert!(w[0].r < w[1].l);
        }
    }
}

/// Engine and analysis agree: empirical success frequency in a fixed-contention
/// slot matches the exact formula. Slot one of a batch of `n` plain-backoff
/// nodes has every probability 1 at age 1 and 1/2 at age 2, so check slot 2:
/// all `n` survivors (collision in slot 1 for n >= 2) send with 1/2.
#[test]
fn slot_frequency_matches_exact_probability() {
    let n = 6u32;
    let trials = 4000u64;
    let (exact, _) = exact_success_probs(&vec![0.5; n as usize]).unwrap();
    let mut successes = 0u64;
    for seed in 0..trials {
        let cfg = {
            let mut c =
                ExecutionConfig::new("plain-backoff", AdversarySpec::default(), n, 0, seed);
            c.record = RecordMode::Slots;
            c.max_slots = Some(2);
            c
        };
        let trace = run_execution(&cfg).unwrap();
        // Slot 1 is always an n-way collision for n >= 2.
        assert_eq!(trace.slots[0].channels[0].truth, ChannelTruth::Collision);
        if matches!(trace.slots[1].channels[0].truth, ChannelTruth::Success(_)) {
            successes += 1;
        }
    }
    let freq = successes as f64 / trials as f64;
    let se = (exact * (1.0 - exact) / trials as f64).sqrt();
    assert!(
        (freq - exact).abs() < 5.0 * se,
        "frequency {freq} vs exact {exact} (se {se})"
    );
}
