//! Adversary strategies: injection schedules, jamming rules under a hard
//! budget, interference-node directives, and the explicit lower-bound
//! constructions (front jamming, prefix-plus-random jam plans, sqrt
//! injection, and the pigeonhole schedule-gap index).

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rng::derive_seed;
use crate::{Error, Result};

/// Stream tag for the scattered-arrival schedule.
const SCATTER_TAG: u64 = 0x5ca7;

/// When and how many normal nodes are injected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionRule {
    /// All `n` nodes at the beginning of slot one.
    #[default]
    Batch,
    /// `floor(sqrt(n))` nodes in each of the first `floor(sqrt(n))` slots,
    /// remainder at slot one.
    Sqrt,
    /// Each node's arrival slot drawn uniformly from `[1, window]`,
    /// deterministically from the execution seed.
    Scattered { window: u64 },
    /// Explicit `(slot, count)` schedule; counts must total `n`.
    Schedule(Vec<(u64, u32)>),
}

/// Per-slot, per-channel jamming rule. Every rule spends one budget unit per
/// jammed channel per slot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JamRule {
    #[default]
    None,
    /// Jam from slot one until the budget is gone: the single channel for
    /// the first `d` slots, or both channels for the first `d/2` slots.
    Front,
    /// Prefix-plus-random plan over a fixed horizon: jam slots
    /// `1..=floor(t/4C)` plus as many more chosen uniformly at random from
    /// the rest of the horizon (channel one only).
    Plan { horizon: u64, big_c: f64 },
    /// Adaptive: jam the data channel whenever its current-slot contention
    /// falls inside `[lo, hi]`, until the budget is exhausted.
    Band { lo: f64, hi: f64 },
    /// Explicit channel-one slot list. Not budget-capped: exceeding `d`
    /// aborts the execution.
    Slots(Vec<u64>),
}

/// One interference node: injection slot plus the channel-one start choice.
/// The channel-two schedule always starts at the injection slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferenceDirective {
    pub slot: u64,
    /// If true, the channel-one schedule starts the slot after injection.
    #[serde(default)]
    pub delayed_ch1: bool,
}

/// A complete adversary strategy. The hard jamming budget is the execution
/// config's `d` unless overridden here.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    #[serde(default)]
    pub injection: InjectionRule,
    #[serde(default)]
    pub jam: JamRule,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub interference: Vec<InterferenceDirective>,
}

impl AdversarySpec {
    /// Preset strategies by registry id.
    pub fn from_id(id: &str, n: u32, d: u64) -> Result<Self> {
        let spec = match id {
            "none" | "batch" => AdversarySpec::default(),
            "front" => AdversarySpec {
                jam: JamRule::Front,
                ..Default::default()
            },
            "lb-jam" => AdversarySpec {
                jam: JamRule::Plan {
                    horizon: 8 * d.max(2),
                    big_c: 4.0,
                },
                ..Default::default()
            },
            "sqrt-inject" => AdversarySpec {
                injection: InjectionRule::Sqrt,
                ..Default::default()
            },
            "band-jam" => AdversarySpec {
                jam: JamRule::Band { lo: 0.5, hi: 2.0 },
                ..Default::default()
            },
            "interference" => AdversarySpec {
                interference: vec![InterferenceDirective {
                    slot: 1,
                    delayed_ch1: false,
                }],
                ..Default::default()
            },
            other => return Err(Error::UnknownAdversary(other.to_string())),
        };
        let _ = n;
        Ok(spec)
    }

    /// All registered ids.
    pub fn ids() -> &'static [&'static str] {
        &[
            "none",
            "batch",
            "front",
            "lb-jam",
            "sqrt-inject",
            "band-jam",
            "interference",
        ]
    }

    pub fn effective_budget(&self, d: u64) -> u64 {
        self.budget.unwrap_or(d)
    }

    pub fn validate(&self, n: u32, d: u64, channels: usize) -> Result<()> {
        if let Some(b) = self.budget {
            if b != d {
                return Err(Error::Config(format!(
                    "adversary budget {b} conflicts with config d = {d}"
                )));
            }
        }
        match &self.injection {
            InjectionRule::Batch | InjectionRule::Sqrt => {}
            InjectionRule::Scattered { window } => {
                if *window < 1 {
                    return Err(Error::Config("scattered window must be >= 1".into()));
                }
            }
            InjectionRule::Schedule(entries) => {
                let total: u64 = entries.iter().map(|(_, k)| *k as u64).sum();
                if total != n as u64 {
                    return Err(Error::Config(format!(
                        "injection schedule totals {total}, expected n = {n}"
                    )));
                }
                if entries.iter().any(|(s, _)| *s < 1) {
                    return Err(Error::Config("injection slots are 1-based".into()));
                }
            }
        }
        match &self.jam {
            JamRule::Plan { horizon, big_c } => {
                if (*horizon as f64) < 4.0 * big_c {
                    return Err(Error::Config("jam plan requires horizon >= 4C".into()));
                }
            }
            JamRule::Band { lo, hi } => {
                if !(*lo >= 0.0 && lo < hi) {
                    return Err(Error::Config("band jammer requires 0 <= lo < hi".into()));
                }
            }
            _ => {}
        }
        if !self.interference.is_empty() {
            if channels != 2 {
                return Err(Error::Config(
                    "interference nodes require the two-channel model".into(),
                ));
            }
            if self.interference.len() > n as usize {
                return Err(Error::Config(format!(
                    "at most n = {n} interference nodes allowed, got {}",
                    self.interference.len()
                )));
            }
            if self.interference.iter().any(|dir| dir.slot < 1) {
                return Err(Error::Config("interference slots are 1-based".into()));
            }
        }
        Ok(())
    }
}

/// Front-jamming flags for one slot: single channel jams slots `1..=d`;
/// two channels jam both while two units remain, then channel one once more
/// if `d` is odd.
pub fn front_jam_flags(d: u64, channels: usize, slot: u64) -> [bool; 2] {
    if channels == 1 {
        [slot <= d, false]
    } else {
        let full = d / 2;
        if slot <= full {
            [true, true]
        } else if slot == full + 1 && d % 2 == 1 {
            [true, false]
        } else {
            [false, false]
        }
    }
}

/// The prefix-plus-random jam plan: `{1..=k}` plus `k` slots sampled
/// uniformly without replacement from `(k, t]`, where `k = floor(t/(4C))`.
/// Deterministic given the seed.
pub fn lower_bound_jam_plan(t: u64, big_c: f64, seed: u64) -> Result<BTreeSet<u64>> {
    if (t as f64) < 4.0 * big_c {
        return Err(Error::InvalidArgument(format!(
            "jam plan horizon t = {t} must be >= 4C = {}",
            4.0 * big_c
        )));
    }
    let k = (t as f64 / (4.0 * big_c)).floor() as u64;
    let mut slots: BTreeSet<u64> = (1..=k).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, (t - k) as usize, k as usize);
    for p in picks.iter() {
        slots.insert(k + 1 + p as u64);
    }
    debug_assert_eq!(slots.len() as u64, 2 * k);
    Ok(slots)
}

/// Injection schedule of the sqrt construction: `floor(sqrt(n))` nodes in
/// each of the first `floor(sqrt(n))` slots, remainder at slot one.
pub fn sqrt_injector(n: u32) -> Result<Vec<(u64, u32)>> {
    if n < 1 {
        return Err(Error::InvalidArgument("sqrt_injector requires n >= 1".into()));
    }
    let r = (n as f64).sqrt().floor() as u32;
    let remainder = n - r * r;
    let mut schedule = Vec::with_capacity(r as usize);
    for slot in 1..=r as u64 {
        let extra = if slot == 1 { remainder } else { 0 };
        schedule.push((slot, r + extra));
    }
    Ok(schedule)
}

/// Result of the pigeonhole schedule-gap search over `t+1` intervals
/// `I_i = [t^{-(i+1)c}, t^{-ic})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PigeonholeResult {
    /// Smallest index whose interval contains no schedule value.
    pub i_hat: u64,
    /// The `t+1` intervals, as `[lo, hi)` pairs (may underflow to zero for
    /// large `t`; membership is computed in log space).
    pub intervals: Vec<[f64; 2]>,
    /// Implied synchronized injection count `t^{i_hat*c + c/2}`.
    pub injected_count: f64,
    /// Indices `j` of values below the bottom interval `t^{-(t+1)c}`.
    pub out_of_range: Vec<usize>,
}

/// Membership of `x` among the intervals: `x` lies in `I_i` iff
/// `i < -log2(x)/(c*log2 t) <= i+1`. Returns `None` for values at or above
/// 1's boundary (never inside any interval) or below the bottom interval.
fn interval_index(x: f64, t: u64, c: f64) -> Option<u64> {
    let e = -x.log2() / (c * (t as f64).log2());
    if e <= 0.0 || e > (t + 1) as f64 {
        return None;
    }
    Some(e.ceil() as u64 - 1)
}

/// Find the smallest `i_hat` in `[0, t]` such that no schedule value
/// `x_1..x_t` falls in `I_i_hat`, and the implied injection count.
///
/// Errors for `t < 2` (the `t = 1` intervals are degenerate), `c < 2`, or
/// values outside `(0, 1]`.
pub fn pigeonhole_index(xs: &[f64], c: f64) -> Result<PigeonholeResult> {
    let t = xs.len() as u64;
    if t < 2 {
        return Err(Error::InvalidArgument(
            "pigeonhole index requires at least two schedule values".into(),
        ));
    }
    if c < 2.0 {
        return Err(Error::InvalidArgument("pigeonhole requires c >= 2".into()));
    }
    if xs.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::InvalidArgument(
            "schedule values must lie in (0, 1]".into(),
        ));
    }
    let mut blocked = vec![false; (t + 1) as usize];
    let mut out_of_range = Vec::new();
    for (j, &x) in xs.iter().enumerate() {
        match interval_index(x, t, c) {
            Some(i) if i <= t => blocked[i as usize] = true,
            _ => {
                let e = -x.log2() / (c * (t as f64).log2());
                if e > (t + 1) as f64 {
                    out_of_range.push(j);
                }
            }
        }
    }
    // t values cannot block all t+1 intervals.
    let i_hat = blocked
        .iter()
        .position(|b| !b)
        .expect("pigeonhole guarantees a free interval") as u64;
    let tf = t as f64;
    let intervals = (0..=t)
        .map(|i| {
            [
                tf.powf(-((i + 1) as f64) * c),
                tf.powf(-(i as f64) * c),
            ]
        })
        .collect();
    Ok(PigeonholeResult {
        i_hat,
        intervals,
        injected_count: tf.powf(i_hat as f64 * c + c / 2.0),
        out_of_range,
    })
}

/// Interference injection map keyed by slot; errors outside the two-channel
/// model.
pub fn interference_schedule(
    directives: &[InterferenceDirective],
    channels: usize,
) -> Result<BTreeMap<u64, Vec<InterferenceDirective>>> {
    if channels != 2 {
        return Err(Error::Config(
            "interference nodes require the two-channel model".into(),
        ));
    }
    let mut map: BTreeMap<u64, Vec<InterferenceDirective>> = BTreeMap::new();
    for dir in directives {
        map.entry(dir.slot).or_default().push(dir.clone());
    }
    Ok(map)
}

/// Engine-facing, fully resolved adversary: injection schedule precomputed,
/// jam rule evaluated per slot. Decisions in slot `s` are a deterministic
/// function of `(spec, seed, visible history through s-1)`; the band rule's
/// contention input is itself a deterministic function of that history.
#[derive(Clone, Debug)]
pub struct AdversaryRuntime {
    normals_at: BTreeMap<u64, u32>,
    interference_at: BTreeMap<u64, Vec<InterferenceDirective>>,
    jam: JamRuntime,
    last_normal_slot: u64,
}

#[derive(Clone, Debug)]
enum JamRuntime {
    None,
    Front { d: u64, channels: usize },
    /// Self-capped channel-one slot set.
    Plan(BTreeSet<u64>),
    Band { lo: f64, hi: f64 },
    /// Raw channel-one slot set; may attempt to exceed the budget.
    Slots(BTreeSet<u64>),
}

impl AdversaryRuntime {
    pub fn build(
        spec: &AdversarySpec,
        n: u32,
        d: u64,
        channels: usize,
        seed: u64,
    ) -> Result<Self> {
        spec.validate(n, d, channels)?;
        let mut normals_at: BTreeMap<u64, u32> = BTreeMap::new();
        match &spec.injection {
            InjectionRule::Batch => {
                normals_at.insert(1, n);
            }
            InjectionRule::Sqrt => {
                for (slot, count) in sqrt_injector(n)? {
                    normals_at.insert(slot, count);
                }
            }
            InjectionRule::Scattered { window } => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SCATTER_TAG));
                for _ in 0..n {
                    let slot = 1 + rand::Rng::gen_range(&mut rng, 0..*window);
                    *normals_at.entry(slot).or_insert(0) += 1;
                }
            }
            InjectionRule::Schedule(entries) => {
                for (slot, count) in entries {
                    *normals_at.entry(*slot).or_insert(0) += count;
                }
            }
        }
        let interference_at = if spec.interference.is_empty() {
            BTreeMap::new()
        } else {
            interference_schedule(&spec.interference, channels)?
        };
        let jam = match &spec.jam {
            JamRule::None => JamRuntime::None,
            JamRule::Front => JamRuntime::Front { d, channels },
            JamRule::Plan { horizon, big_c } => {
                JamRuntime::Plan(lower_bound_jam_plan(*horizon, *big_c, seed)?)
            }
            JamRule::Band { lo, hi } => JamRuntime::Band { lo: *lo, hi: *hi },
            JamRule::Slots(slots) => JamRuntime::Slots(slots.iter().copied().collect()),
        };
        let last_normal_slot = normals_at.keys().next_back().copied().unwrap_or(0);
        Ok(AdversaryRuntime {
            normals_at,
            interference_at,
            jam,
            last_normal_slot,
        })
    }

    /// Normal-node count and interference directives injected at `slot`.
    pub fn injections(&self, slot: u64) -> (u32, &[InterferenceDirective]) {
        let normals = self.normals_at.get(&slot).copied().unwrap_or(0);
        let dirs = self
            .interference_at
            .get(&slot)
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        (normals, dirs)
    }

    /// Last slot with a pending normal injection.
    pub fn last_normal_slot(&self) -> u64 {
        self.last_normal_slot
    }

    /// Jam flags for `slot`. `data_contention` is the current slot's
    /// channel-one contention implied by visible history; `budget_left` is
    /// the remaining budget (self-capping rules never exceed it).
    pub fn jam_flags(&self, slot: u64, data_contention: f64, budget_left: u64) -> [bool; 2] {
        match &self.jam {
            JamRuntime::None => [false, false],
            JamRuntime::Front { d, channels } => front_jam_flags(*d, *channels, slot),
            JamRuntime::Plan(slots) => [slots.contains(&slot) && budget_left >= 1, false],
            JamRuntime::Band { lo, hi } => [
                data_contention >= *lo && data_contention <= *hi && budget_left >= 1,
                false,
            ],
            JamRuntime::Slots(slots) => [slots.contains(&slot), false],
        }
    }
}
