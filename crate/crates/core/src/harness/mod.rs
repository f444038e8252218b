//! Trial batches, grid sweeps, and complexity-constant fitting.
//!
//! Trials run in parallel across worker threads; each trial is a pure
//! function of `(config, seed)`, so aggregation is order-independent and
//! sweeps are reproducible byte for byte.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::protocols::BackoffSchedule;
use crate::sim::types::{ExecutionConfig, ExecutionTrace, RecordMode};
use crate::sim::run_execution;
use crate::{Error, Result};

/// Measured quantities of one execution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialSummary {
    pub config: ExecutionConfig,
    pub seed: u64,
    pub active_slots: u64,
    pub max_energy: u64,
    pub energies: Vec<u64>,
    pub success_slots: Vec<u64>,
    pub terminated: bool,
}

impl TrialSummary {
    pub fn from_trace(trace: &ExecutionTrace) -> Self {
        TrialSummary {
            config: trace.config.clone(),
            seed: trace.config.seed,
            active_slots: trace.active_slots,
            max_energy: trace.nodes.iter().map(|n| n.energy).max().unwrap_or(0),
            energies: trace.nodes.iter().map(|n| n.energy).collect(),
            success_slots: trace.success_slots.iter().map(|e| e.slot).collect(),
            terminated: trace.terminated,
        }
    }
}

/// Run `trials` independent executions with seeds
/// `seed_base..seed_base+trials`, in parallel. Per-trial errors are
/// reported in place without aborting the batch.
pub fn run_trials(
    config: &ExecutionConfig,
    trials: u64,
    seed_base: u64,
) -> Result<Vec<Result<TrialSummary>>> {
    if trials < 1 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    Ok((0..trials)
        .into_par_iter()
        .map(|i| {
            let mut cfg = config.clone();
            cfg.seed = seed_base + i;
            run_execution(&cfg).map(|t| TrialSummary::from_trace(&t))
        })
        .collect())
}

/// Like [`run_trials`] but failing the whole batch on any trial error.
pub fn run_trials_strict(
    config: &ExecutionConfig,
    trials: u64,
    seed_base: u64,
) -> Result<Vec<TrialSummary>> {
    run_trials(config, trials, seed_base)?.into_iter().collect()
}

/// Complexity models measured quantities are fitted against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `n*log2(n) + d`
    NLogNPlusD,
    /// `n + d`
    NPlusD,
    /// `log2(n)^2 + log2(d)^2`
    Log2SqPlusLog2Sq,
}

impl FitModel {
    pub fn id(&self) -> &'static str {
        match self {
            FitModel::NLogNPlusD => "n_log_n_plus_d",
            FitModel::NPlusD => "n_plus_d",
            FitModel::Log2SqPlusLog2Sq => "log2_sq_plus_log2_sq",
        }
    }

    /// Model value at a grid point. Logs are clamped below at 1 so the model
    /// stays positive for n = 1 or d <= 1.
    pub fn eval(&self, n: u32, d: u64) -> f64 {
        let nf = n as f64;
        let df = d as f64;
        let lg = |x: f64| x.max(2.0).log2();
        match self {
            FitModel::NLogNPlusD => nf * lg(nf) + df,
            FitModel::NPlusD => nf + df,
            FitModel::Log2SqPlusLog2Sq => {
                let a = lg(nf);
                let b = if d == 0 { 0.0 } else { lg(df) };
                a * a + b * b
            }
        }
    }
}

/// Fitted constant for `measured <= C * model(n, d)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Least-squares constant through the origin.
    pub c_lsq: f64,
    /// Upper-envelope constant `max(measured / model)`.
    pub c_envelope: f64,
    /// `max(measured) / (c_lsq * model)` over the points.
    pub max_ratio: f64,
    pub residuals: Vec<f64>,
}

/// Fit a single constant to `measured ~ C * model(n, d)` over the points.
pub fn fit_constant(points: &[(u32, u64, f64)], model: FitModel) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(
            "fitting requires at least three points".into(),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut envelope = 0.0f64;
    for &(n, d, m) in points {
        let f = model.eval(n, d);
        if !(f > 0.0) {
            return Err(Error::Analysis(format!(
                "model {} degenerates at (n={n}, d={d})",
                model.id()
            )));
        }
        num += m * f;
        den += f * f;
        envelope = envelope.max(m / f);
    }
    let c_lsq = num / den;
    let mut max_ratio = 0.0f64;
    let residuals = points
        .iter()
        .map(|&(n, d, m)| {
            let pred = c_lsq * model.eval(n, d);
            max_ratio = max_ratio.max(m / pred);
            m - pred
        })
        .collect();
    Ok(FitResult {
        model,
        c_lsq,
        c_envelope: envelope,
        max_ratio,
        residuals,
    })
}

/// Expected sends of a lone node during a front-jammed window of `d` slots:
/// `sum_{x=1..d} min(1, h(x))`, computed directly from the schedule.
pub fn front_jam_energy_oracle(schedule: BackoffSchedule, d: u64) -> f64 {
    (1..=d).map(|x| schedule.prob_unchecked(x)).sum()
}

/// One grid point of a sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: u32,
    pub d: u64,
    pub summaries: Vec<TrialSummary>,
}

/// Sweep output: raw per-trial rows plus fits of the median measured values
/// against each requested model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub csv: String,
    pub active_slot_fits: Vec<FitResult>,
    pub energy_fits: Vec<FitResult>,
    pub points: Vec<SweepPoint>,
}

pub const CSV_HEADER: &str = "protocol,adversary,n,d,c,seed,active_slots,max_energy,terminated";

fn median_u64(values: &mut [u64]) -> f64 {
    values.sort_unstable();
    let k = values.len();
    if k == 0 {
        return 0.0;
    }
    if k % 2 == 1 {
        values[k / 2] as f64
    } else {
        (values[k / 2 - 1] + values[k / 2]) as f64 / 2.0
    }
}

/// Run the full `n x d` grid for one protocol/adversary pair.
///
/// `adversary_id` selects a preset strategy per grid point (the jamming
/// budget follows `d`). Each trial uses counters-only recording. The CSV is
/// a pure function of the arguments.
pub fn sweep(
    protocol: &str,
    adversary_id: &str,
    n_grid: &[u32],
    d_grid: &[u64],
    trials: u64,
    seed_base: u64,
    c: f64,
    models: &[FitModel],
) -> Result<SweepReport> {
    if n_grid.is_empty() || d_grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid must be non-empty".into()));
    }
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut points = Vec::new();
    let mut active_points = Vec::new();
    let mut energy_points = Vec::new();
    for &n in n_grid {
        for &d in d_grid {
            let spec = crate::adversary::AdversarySpec::from_id(adversary_id, n, d)?;
            let mut cfg = ExecutionConfig::new(protocol, spec, n, d, seed_base);
            cfg.c = c;
            cfg.record = RecordMode::Counters;
            let summaries = run_trials_strict(&cfg, trials, seed_base)?;
            for s in &summaries {
                use std::fmt::Write as _;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    protocol, adversary_id, n, d, c, s.seed, s.active_slots, s.max_energy,
                    s.terminated
                );
            }
            let mut act: Vec<u64> = summaries.iter().map(|s| s.active_slots).collect();
            let mut en: Vec<u64> = summaries.iter().map(|s| s.max_energy).collect();
            active_points.push((n, d, median_u64(&mut act)));
            energy_points.push((n, d, median_u64(&mut en)));
            points.push(SweepPoint { n, d, summaries });
        }
    }
    let mut active_slot_fits = Vec::new();
    let mut energy_fits = Vec::new();
    if active_points.len() >= 3 {
        for &m in models {
            active_slot_fits.push(fit_constant(&active_points, m)?);
            energy_fits.push(fit_constant(&energy_points, m)?);
        }
    }
    Ok(SweepReport {
        csv,
        active_slot_fits,
        energy_fits,
        points,
    })
}

/// Per-point envelope constants `max_over_trials(measured / model)`, used
/// for the stability checks: a scaling law is accepted when the largest
/// per-point envelope is within a small factor of the median one.
pub fn envelope_per_point(
    points: &[SweepPoint],
    model: FitModel,
    measure: fn(&TrialSummary) -> u64,
) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            let f = model.eval(p.n, p.d);
            p.summaries
                .iter()
                .map(|s| measure(s) as f64 / f)
                .fold(0.0f64, f64::max)
        })
        .collect()
}

/// `max / median` of a list of positive envelopes.
pub fn envelope_stability(envelopes: &[f64]) -> f64 {
    if envelopes.is_empty() {
        return f64::NAN;
    }
    let mut sorted = envelopes.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2]
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0
    };
    sorted[k - 1] / median
}
