//! Measurement scheduling and end-to-end run loops.
//!
//! The adaptive controller measures wherever the posterior phase variance is
//! largest; the naive baseline sweeps the array (or samples it uniformly when
//! the budget is not a whole number of sweeps) and estimates each site from
//! its own bits alone. Both loops draw bits from a [`MeasurementSource`] —
//! either the simulated measurement model over a true field, or replay from
//! a recorded data bank — and never read ground truth for scheduling.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{NmqaError, Result};
use crate::filter::{FilterConfig, Observation, ParticleEnsemble, SharedStateTally};
use crate::lattice::{QubitArray, TrueField};
use crate::measurement::{
    empirical_truth, replay_measurement, simulate_measurement, DataBank, MeasurementOutcome,
};
use crate::rng::stream_rng;
use crate::sharing::generate_messages;

/// Which estimation pipeline produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Nmqa,
    Naive,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Nmqa => "nmqa",
            Strategy::Naive => "naive",
        })
    }
}

/// Site selection for the filter-driven run loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheduler {
    /// Maximum posterior phase variance, ties uniform at random.
    #[default]
    Adaptive,
    /// Uniform random site each iteration.
    Random,
    /// Fixed round-robin sweep.
    Sweep,
}

/// Site selection for the naive baseline.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaiveSchedule {
    /// Sweep when T is a whole number of passes, else uniform random.
    #[default]
    Auto,
    Random,
    Sweep,
}

/// Where physical bits come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementSource {
    /// Bernoulli draws through the measurement model over a known field.
    Simulated { field: TrueField, sigma_v: f64 },
    /// Uniform draws with replacement from a recorded bank.
    Replay { bank: DataBank },
}

impl MeasurementSource {
    pub fn simulated(field: TrueField, sigma_v: f64) -> Result<Self> {
        if !(sigma_v > 0.0 && sigma_v < 1.0) {
            return Err(NmqaError::InvalidArgument(format!(
                "sigma_v must lie in (0, 1), got {sigma_v}"
            )));
        }
        Ok(Self::Simulated { field, sigma_v })
    }

    pub fn replay(bank: DataBank) -> Self {
        Self::Replay { bank }
    }

    /// Number of sites the source covers.
    pub fn d(&self) -> usize {
        match self {
            Self::Simulated { field, .. } => field.values().len(),
            Self::Replay { bank } => bank.d(),
        }
    }

    /// The field reconstructions are scored against: the true field when
    /// simulating, the bank's per-site empirical phase when replaying.
    pub fn reference_field(&self) -> TrueField {
        match self {
            Self::Simulated { field, .. } => field.clone(),
            Self::Replay { bank } => empirical_truth(bank),
        }
    }

    /// One physical bit at `site`.
    pub fn draw<R: Rng + ?Sized>(&self, site: usize, rng: &mut R) -> Result<u8> {
        match self {
            Self::Simulated { field, sigma_v } => {
                let f = *field.values().get(site).ok_or_else(|| {
                    NmqaError::InvalidArgument(format!(
                        "site {site} out of range for {}-site field",
                        field.values().len()
                    ))
                })?;
                simulate_measurement(f, *sigma_v, rng)
            }
            Self::Replay { bank } => replay_measurement(bank, site, rng),
        }
    }
}

/// Everything one run produced. `trajectory` holds 1-based site labels, the
/// convention used in exported artifacts; all in-memory APIs are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub strategy: Strategy,
    pub t_total: usize,
    pub trajectory: Vec<usize>,
    pub outcomes: Vec<u8>,
    pub final_map: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_iteration_maps: Option<Vec<Vec<f64>>>,
    pub seed: u64,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub abort_reason: Option<String>,
    pub config: serde_json::Value,
}

/// Argmax of the per-site posterior phase variance; exact ties are broken
/// uniformly at random.
pub fn choose_next_adaptive<R: Rng + ?Sized>(f_var: &[f64], rng: &mut R) -> Result<usize> {
    if f_var.is_empty() {
        return Err(NmqaError::InvalidArgument("empty variance vector".into()));
    }
    let best = f_var.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = f_var
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == best)
        .map(|(q, _)| q)
        .collect();
    Ok(tied[rng.random_range(0..tied.len())])
}

/// Naive site for iteration `t` (1-based): a round-robin sweep when the
/// budget is a whole number of passes, else a uniform random site.
pub fn choose_next_naive<R: Rng + ?Sized>(
    t: usize,
    t_total: usize,
    d: usize,
    rng: &mut R,
) -> Result<usize> {
    if d == 0 {
        return Err(NmqaError::InvalidArgument("empty array".into()));
    }
    if t == 0 || t > t_total {
        return Err(NmqaError::InvalidArgument(format!(
            "iteration {t} outside 1..={t_total}"
        )));
    }
    if t_total % d == 0 {
        Ok((t - 1) % d)
    } else {
        Ok(rng.random_range(0..d))
    }
}

/// Knobs for the filter-driven run loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub scheduler: Scheduler,
    pub record_maps: bool,
}

/// Knobs for the naive baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveOptions {
    pub schedule: NaiveSchedule,
    /// Phase assigned to sites that never got measured.
    pub default_fill: f64,
    pub record_maps: bool,
}

impl Default for NaiveOptions {
    fn default() -> Self {
        Self { schedule: NaiveSchedule::Auto, default_fill: FRAC_PI_2, record_maps: false }
    }
}

/// Adaptive filter run with default options.
pub fn run_nmqa(
    config: &FilterConfig,
    array: &QubitArray,
    source: &MeasurementSource,
    t_total: usize,
    seed: u64,
) -> Result<RunRecord> {
    run_nmqa_with(config, array, source, t_total, seed, &RunOptions::default())
}

/// Filter-driven run loop: pick a site, draw a bit, step the filter on the
/// bit plus any messages queued by the previous iteration, then generate
/// fresh messages from the posterior. A degenerate-weights abort returns a
/// partial record with `valid = false` instead of an error.
pub fn run_nmqa_with(
    config: &FilterConfig,
    array: &QubitArray,
    source: &MeasurementSource,
    t_total: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<RunRecord> {
    config.validate()?;
    let d = array.len();
    check_run_args(source, d, t_total)?;

    let snapshot = json!({
        "strategy": "nmqa",
        "t_total": t_total,
        "seed": seed,
        "options": serde_json::to_value(options).expect("options serialize"),
        "filter": serde_json::to_value(config).expect("filter config serializes"),
    });

    let mut rng = stream_rng(seed, 0);
    let mut ens = ParticleEnsemble::init(config, array, &mut rng)?;
    let mut tally = SharedStateTally::new(d);
    let mut post = ens.posterior_summary();
    let mut pending: Vec<MeasurementOutcome> = Vec::new();

    let mut trajectory = Vec::with_capacity(t_total);
    let mut outcomes = Vec::with_capacity(t_total);
    let mut maps = options.record_maps.then(Vec::new);

    for t in 1..=t_total {
        let j = match options.scheduler {
            // every site starts at the same prior variance, so the first
            // adaptive pick is symmetry-breaking
            Scheduler::Adaptive if t == 1 => rng.random_range(0..d),
            Scheduler::Adaptive => choose_next_adaptive(&post.f_var, &mut rng)?,
            Scheduler::Random => rng.random_range(0..d),
            Scheduler::Sweep => (t - 1) % d,
        };
        let bit = source.draw(j, &mut rng)?;
        trajectory.push(j + 1);
        outcomes.push(bit);

        let obs = Observation::new(
            MeasurementOutcome::physical(j, bit),
            std::mem::take(&mut pending),
        )?;
        if let Err(e) = ens.step(&mut tally, &obs, array, &mut rng) {
            if let NmqaError::DegenerateWeights(_) = e {
                return Ok(RunRecord {
                    strategy: Strategy::Nmqa,
                    t_total,
                    trajectory,
                    outcomes,
                    final_map: post.f_mean,
                    per_iteration_maps: maps,
                    seed,
                    valid: false,
                    abort_reason: Some(e.to_string()),
                    config: snapshot,
                });
            }
            return Err(e);
        }
        post = ens.posterior_summary();
        pending = generate_messages(&post, j, array, &tally, config.lambda2, config.k0, &mut rng)?;
        if let Some(maps) = maps.as_mut() {
            maps.push(post.f_mean.clone());
        }
    }

    Ok(RunRecord {
        strategy: Strategy::Nmqa,
        t_total,
        trajectory,
        outcomes,
        final_map: post.f_mean,
        per_iteration_maps: maps,
        seed,
        valid: true,
        abort_reason: None,
        config: snapshot,
    })
}

/// Naive baseline run with default options.
pub fn run_naive(
    array: &QubitArray,
    source: &MeasurementSource,
    t_total: usize,
    seed: u64,
) -> Result<RunRecord> {
    run_naive_with(array, source, t_total, seed, &NaiveOptions::default())
}

/// Brute-force baseline: schedule per [`NaiveSchedule`], estimate each
/// measured site as `arccos(2 kappa - 1)` from its own bits, and leave
/// unmeasured sites at `default_fill`.
pub fn run_naive_with(
    array: &QubitArray,
    source: &MeasurementSource,
    t_total: usize,
    seed: u64,
    options: &NaiveOptions,
) -> Result<RunRecord> {
    let d = array.len();
    check_run_args(source, d, t_total)?;
    if !(0.0..=PI).contains(&options.default_fill) {
        return Err(NmqaError::InvalidArgument(format!(
            "default fill {} outside [0, pi]",
            options.default_fill
        )));
    }

    let snapshot = json!({
        "strategy": "naive",
        "t_total": t_total,
        "seed": seed,
        "options": serde_json::to_value(options).expect("options serialize"),
    });

    let mut rng = stream_rng(seed, 0);
    let mut counts = vec![0u64; d];
    let mut means = vec![0.0f64; d];
    let mut trajectory = Vec::with_capacity(t_total);
    let mut outcomes = Vec::with_capacity(t_total);
    let mut maps = options.record_maps.then(Vec::new);

    for t in 1..=t_total {
        let j = match options.schedule {
            NaiveSchedule::Auto => choose_next_naive(t, t_total, d, &mut rng)?,
            NaiveSchedule::Random => rng.random_range(0..d),
            NaiveSchedule::Sweep => (t - 1) % d,
        };
        let bit = source.draw(j, &mut rng)?;
        counts[j] += 1;
        means[j] += (bit as f64 - means[j]) / counts[j] as f64;
        trajectory.push(j + 1);
        outcomes.push(bit);
        if let Some(maps) = maps.as_mut() {
            maps.push(naive_map(&means, &counts, options.default_fill));
        }
    }

    Ok(RunRecord {
        strategy: Strategy::Naive,
        t_total,
        trajectory,
        outcomes,
        final_map: naive_map(&means, &counts, options.default_fill),
        per_iteration_maps: maps,
        seed,
        valid: true,
        abort_reason: None,
        config: snapshot,
    })
}

fn naive_map(means: &[f64], counts: &[u64], default_fill: f64) -> Vec<f64> {
    means
        .iter()
        .zip(counts.iter())
        .map(|(&m, &c)| {
            if c == 0 {
                default_fill
            } else {
                (2.0 * m - 1.0).clamp(-1.0, 1.0).acos()
            }
        })
        .collect()
}

fn check_run_args(source: &MeasurementSource, d: usize, t_total: usize) -> Result<()> {
    if t_total == 0 {
        return Err(NmqaError::InvalidArgument(
            "measurement budget must be at least 1".into(),
        ));
    }
    if source.d() != d {
        return Err(NmqaError::InvalidArgument(format!(
            "source covers {} sites but array has {d}",
            source.d()
        )));
    }
    Ok(())
}
