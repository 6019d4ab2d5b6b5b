//! Subcommand implementations: build an experiment from a manifest, sweep
//! both strategies over the budget list (trials in parallel), and persist
//! scoreboards, ratio curves, run records, and tuning results.

use std::path::PathBuf;

use nmqa::control::{run_naive, run_nmqa, MeasurementSource, RunRecord, Strategy};
use nmqa::filter::FilterConfig;
use nmqa::lattice::{build_grid, make_field, QubitArray, TrueField};
use nmqa::measurement::{ingest_databank, NoiseParams};
use nmqa::metrics::{avg_ssim, ratio_curve, Scoreboard};
use nmqa::rng::{derive_seed, stream_rng, sweep_stream};
use nmqa::tuner::{sample_pairs, tune, TuningResult};
use nmqa::NmqaError;
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig};
use crate::output;

/// Stream index reserved for sampling tuning candidates; run seeds use the
/// small indices produced by [`sweep_stream`], so the two never collide.
const PAIR_STREAM: u64 = u64::MAX;

/// A manifest resolved into concrete runnable pieces.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub array: QubitArray,
    pub filter: FilterConfig,
    pub source: MeasurementSource,
    /// What reconstructions are scored against: the synthetic truth, or the
    /// bank's empirical per-site phases when replaying.
    pub truth: TrueField,
}

/// Everything one sweep produced, before any file is written.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub scoreboard: Scoreboard,
    pub records: Vec<RunRecord>,
    /// Runs that aborted on degenerate weights (scored 1.0, kept in
    /// `records` with `valid = false`).
    pub aborted: usize,
}

/// Files written plus the in-memory results, for the caller to summarize.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub files: Vec<PathBuf>,
    pub scoreboard: Scoreboard,
    pub aborted: usize,
}

#[derive(Debug, Clone)]
pub struct TuneReport {
    pub files: Vec<PathBuf>,
    pub result: TuningResult,
}

/// Filter configuration implied by a manifest over a given array.
pub fn filter_config(cfg: &RunConfig, array: &QubitArray) -> FilterConfig {
    let mut fc = FilterConfig::for_array(array);
    fc.n_alpha = cfg.n_alpha;
    fc.n_beta = cfg.n_beta;
    fc.lambda1 = cfg.lambda1;
    fc.lambda2 = cfg.lambda2;
    fc.noise = NoiseParams { sigma_v: cfg.sigma_v, mu_f: cfg.mu_f, sigma_f: cfg.sigma_f };
    fc.k0 = cfg.k0;
    if let Some(r) = cfg.r_min {
        fc.r_min = r;
    }
    if let Some(r) = cfg.r_max {
        fc.r_max = r;
    }
    fc
}

fn checked_filter(cfg: &RunConfig, array: &QubitArray) -> Result<FilterConfig, ConfigError> {
    let fc = filter_config(cfg, array);
    fc.validate().map_err(|e| ConfigError::new(e.to_string()))?;
    Ok(fc)
}

/// Resolve a manifest into a synthetic-field experiment.
pub fn build_simulated(cfg: &RunConfig) -> anyhow::Result<Experiment> {
    cfg.validate()?;
    let array = build_grid(cfg.grid.rows, cfg.grid.cols, cfg.grid.spacing)?;
    let spec = cfg.field.spec()?;
    let truth = make_field(&array, &spec, cfg.field.low, cfg.field.high)?;
    let filter = checked_filter(cfg, &array)?;
    let source = MeasurementSource::simulated(truth.clone(), cfg.sigma_v)?;
    Ok(Experiment { array, filter, source, truth })
}

/// Resolve a manifest into a bank-replay experiment. The bank is ingested
/// before any output is touched, so a bad path leaves no partial files.
pub fn build_replay(cfg: &RunConfig) -> anyhow::Result<Experiment> {
    cfg.validate()?;
    let path = cfg
        .databank
        .as_ref()
        .ok_or_else(|| ConfigError::new("databank: required for replay"))?;
    let bank = ingest_databank(path)?;
    let array = build_grid(cfg.grid.rows, cfg.grid.cols, cfg.grid.spacing)?;
    if bank.d() != array.len() {
        return Err(ConfigError::new(format!(
            "grid: {}x{} grid has {} sites but the databank covers {}",
            cfg.grid.rows,
            cfg.grid.cols,
            array.len(),
            bank.d()
        ))
        .into());
    }
    let filter = checked_filter(cfg, &array)?;
    let source = MeasurementSource::replay(bank);
    let truth = source.reference_field();
    Ok(Experiment { array, filter, source, truth })
}

/// Replay when the manifest names a bank, otherwise simulate.
pub fn build_auto(cfg: &RunConfig) -> anyhow::Result<Experiment> {
    if cfg.databank.is_some() {
        build_replay(cfg)
    } else {
        build_simulated(cfg)
    }
}

/// Run `trials` runs of each strategy at every budget. The seed of each run
/// is `derive_seed(master_seed, sweep_stream(t_index, strategy, trial))`, so
/// results are independent of thread count and schedule.
pub fn run_sweep(cfg: &RunConfig, exp: &Experiment, threads: usize) -> nmqa::Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| NmqaError::InvalidArgument(format!("thread pool: {e}")))?;
    let strategies = [Strategy::Nmqa, Strategy::Naive];
    let mut jobs = Vec::with_capacity(cfg.t_list.len() * strategies.len() * cfg.trials);
    for (t_idx, &t) in cfg.t_list.iter().enumerate() {
        for (s_idx, &strategy) in strategies.iter().enumerate() {
            for trial in 0..cfg.trials {
                jobs.push((t_idx, t, s_idx, strategy, trial));
            }
        }
    }
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(t_idx, t, s_idx, strategy, trial)| {
                let seed = derive_seed(cfg.master_seed, sweep_stream(t_idx, s_idx, trial));
                match strategy {
                    Strategy::Nmqa => run_nmqa(&exp.filter, &exp.array, &exp.source, t, seed),
                    Strategy::Naive => run_naive(&exp.array, &exp.source, t, seed),
                }
            })
            .collect::<nmqa::Result<Vec<_>>>()
    })?;

    let mut scoreboard = Scoreboard::new();
    let mut aborted = 0;
    for chunk in records.chunks(cfg.trials) {
        let entry = avg_ssim(chunk, &exp.truth)?;
        aborted += entry.aborted;
        scoreboard.push(entry);
    }
    Ok(SweepResult { scoreboard, records, aborted })
}

/// Target scores at which the ratio curve is evaluated: 0.05 to 0.95.
pub fn ratio_targets() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

fn write_sweep_outputs(cfg: &RunConfig, sweep: &SweepResult) -> nmqa::Result<Vec<PathBuf>> {
    let naive = sweep.scoreboard.curve(Strategy::Naive);
    let nmqa_curve = sweep.scoreboard.curve(Strategy::Nmqa);
    let points = if naive.len() >= 2 && nmqa_curve.len() >= 2 {
        ratio_curve(&naive, &nmqa_curve, &ratio_targets())?
    } else {
        Vec::new()
    };
    Ok(vec![
        output::write_scoreboard(&cfg.output_dir, cfg, &sweep.scoreboard)?,
        output::write_ratio_curve(&cfg.output_dir, cfg, &points)?,
        output::write_run_records(&cfg.output_dir, cfg, &sweep.records)?,
    ])
}

/// Benchmark both strategies over a synthetic field and write the curves.
pub fn cmd_simulate(cfg: &RunConfig, threads: usize) -> anyhow::Result<SweepReport> {
    let exp = build_simulated(cfg)?;
    let sweep = run_sweep(cfg, &exp, threads)?;
    let files = write_sweep_outputs(cfg, &sweep)?;
    Ok(SweepReport { files, scoreboard: sweep.scoreboard, aborted: sweep.aborted })
}

/// Benchmark both strategies against a recorded data bank.
pub fn cmd_replay(cfg: &RunConfig, threads: usize) -> anyhow::Result<SweepReport> {
    let exp = build_replay(cfg)?;
    let sweep = run_sweep(cfg, &exp, threads)?;
    let files = write_sweep_outputs(cfg, &sweep)?;
    Ok(SweepReport { files, scoreboard: sweep.scoreboard, aborted: sweep.aborted })
}

/// Random-search the sharing weights at the first budget in `t_list`.
/// Candidates share per-trial seeds (common random numbers), so scores are
/// directly comparable; evaluation is sequential.
pub fn cmd_tune(cfg: &RunConfig, n_pairs: usize) -> anyhow::Result<TuneReport> {
    if n_pairs == 0 {
        return Err(ConfigError::new("pairs: must be at least 1").into());
    }
    let exp = build_auto(cfg)?;
    let t_total = cfg.t_list[0];
    let pairs = sample_pairs(n_pairs, &mut stream_rng(cfg.master_seed, PAIR_STREAM));
    let result = tune(
        &exp.filter,
        &exp.array,
        &exp.source,
        t_total,
        cfg.trials,
        &pairs,
        cfg.master_seed,
    )?;
    let files = vec![
        output::write_tuning_csv(&cfg.output_dir, cfg, &result)?,
        output::write_best_pair(&cfg.output_dir, cfg, &result)?,
    ];
    Ok(TuneReport { files, result })
}
