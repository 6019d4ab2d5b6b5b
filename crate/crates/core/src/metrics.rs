//! Map scoring: structural similarity against truth, trial averaging, and
//! the measurement-ratio curve comparing strategies at equal score.
//!
//! The score is `|1 - s(x, y)|` where `s` is the structural index over the
//! whole map vector; 0 is a perfect reconstruction. Per-(strategy, T)
//! entries aggregate single-run scores over trials, and the ratio curve
//! inverts both strategies' score-vs-T curves to ask how many naive
//! measurements buy one unit of adaptive measurement.

use std::io::Write;

use crate::control::{RunRecord, Strategy};
use crate::error::{NmqaError, Result};
use crate::lattice::TrueField;

/// Stabilizing constants of the structural index.
pub const SSIM_C1: f64 = 0.01;
pub const SSIM_C2: f64 = 0.01;

/// Structural dissimilarity `|1 - s(x, y)|` with biased (1/n) moments over
/// the whole vector. 0 means identical structure; a negative `s` (never seen
/// in practice) is reported as a score above 1 rather than clamped.
pub fn ssim(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(NmqaError::InvalidArgument(format!(
            "map lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(NmqaError::InvalidArgument(
            "maps need at least 2 sites for moment estimates".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y.iter()) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cov += (a - mx) * (b - my);
    }
    vx /= n;
    vy /= n;
    cov /= n;
    let s = (2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2)
        / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
    if s < 0.0 {
        eprintln!("warning: negative structural index s = {s}; score exceeds 1");
    }
    Ok((1.0 - s).abs())
}

/// Aggregate over one (strategy, T) cell: the single-run scores, their mean
/// and sample standard deviation, and how many runs aborted (scored 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub strategy: Strategy,
    pub t_total: usize,
    pub avg_ssim: f64,
    pub std: f64,
    pub trials: usize,
    pub aborted: usize,
    pub scores: Vec<f64>,
}

impl ScoreEntry {
    /// Build an entry from raw per-run scores.
    pub fn from_scores(
        strategy: Strategy,
        t_total: usize,
        scores: Vec<f64>,
        aborted: usize,
    ) -> Result<Self> {
        if scores.is_empty() {
            return Err(NmqaError::InvalidArgument("no scores to aggregate".into()));
        }
        let n = scores.len() as f64;
        let avg = scores.iter().sum::<f64>() / n;
        let std = if scores.len() > 1 {
            (scores.iter().map(|s| (s - avg) * (s - avg)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Self { strategy, t_total, avg_ssim: avg, std, trials: scores.len(), aborted, scores })
    }

    /// Standard error of the trial mean.
    pub fn stderr(&self) -> f64 {
        self.std / (self.trials as f64).sqrt()
    }
}

/// Score a batch of runs of one (strategy, T) cell against the truth.
/// Aborted runs count as score 1 and are tallied in `aborted`.
pub fn avg_ssim(runs: &[RunRecord], truth: &TrueField) -> Result<ScoreEntry> {
    let first = runs
        .first()
        .ok_or_else(|| NmqaError::InvalidArgument("no runs to score".into()))?;
    if let Some(bad) = runs
        .iter()
        .find(|r| r.strategy != first.strategy || r.t_total != first.t_total)
    {
        return Err(NmqaError::InvalidArgument(format!(
            "mixed cells: ({:?}, T={}) vs ({:?}, T={})",
            first.strategy, first.t_total, bad.strategy, bad.t_total
        )));
    }
    let mut scores = Vec::with_capacity(runs.len());
    let mut aborted = 0;
    for run in runs {
        if run.valid {
            scores.push(ssim(&run.final_map, truth.values())?);
        } else {
            scores.push(1.0);
            aborted += 1;
        }
    }
    ScoreEntry::from_scores(first.strategy, first.t_total, scores, aborted)
}

/// Collected entries for a benchmark sweep, exportable as CSV with columns
/// `strategy, T, avg_ssim, std, trials`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scoreboard {
    entries: Vec<ScoreEntry>,
}

impl Scoreboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: ScoreEntry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    /// The (T, avg_ssim) curve of one strategy, ordered by T.
    pub fn curve(&self, strategy: Strategy) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| e.strategy == strategy)
            .map(|e| (e.t_total as f64, e.avg_ssim))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["strategy", "T", "avg_ssim", "std", "trials"])
            .map_err(csv_io)?;
        for e in &self.entries {
            out.write_record([
                e.strategy.to_string(),
                e.t_total.to_string(),
                format!("{}", e.avg_ssim),
                format!("{}", e.std),
                e.trials.to_string(),
            ])
            .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> NmqaError {
    NmqaError::InvalidArgument(format!("csv write: {e}"))
}

/// Invert an Avg-SSIM-vs-T curve at `target` by piecewise-linear
/// interpolation, restricted to the maximal monotone-nonincreasing segment
/// ending at the largest T (early points where more data scored worse are
/// inversion artifacts and are excluded).
pub fn invert_avg_ssim(curve: &[(f64, f64)], target: f64) -> Result<f64> {
    if curve.len() < 2 {
        return Err(NmqaError::InvalidArgument(
            "curve needs at least 2 points to invert".into(),
        ));
    }
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // walk back from the largest T while the score keeps rising
    let mut start = pts.len() - 1;
    while start > 0 && pts[start - 1].1 >= pts[start].1 {
        start -= 1;
    }
    let seg = &pts[start..];
    let hi = seg[0].1;
    let lo = seg[seg.len() - 1].1;
    if seg.len() < 2 || !(lo..=hi).contains(&target) {
        return Err(NmqaError::OutOfRange { target, min: lo, max: hi });
    }
    for win in seg.windows(2) {
        let (t0, s0) = win[0];
        let (t1, s1) = win[1];
        if (s1..=s0).contains(&target) {
            if s0 == s1 {
                return Ok(t0);
            }
            return Ok(t0 + (s0 - target) / (s0 - s1) * (t1 - t0));
        }
    }
    Err(NmqaError::OutOfRange { target, min: lo, max: hi })
}

/// How many naive measurements reach the target score per adaptive
/// measurement: `T_naive(target) / T_adaptive(target)`.
pub fn measurement_ratio(
    naive_curve: &[(f64, f64)],
    nmqa_curve: &[(f64, f64)],
    target: f64,
) -> Result<f64> {
    let t_naive = invert_avg_ssim(naive_curve, target)?;
    let t_nmqa = invert_avg_ssim(nmqa_curve, target)?;
    Ok(t_naive / t_nmqa)
}

/// Evaluate the ratio over many targets, omitting targets outside either
/// curve's attained range.
pub fn ratio_curve(
    naive_curve: &[(f64, f64)],
    nmqa_curve: &[(f64, f64)],
    targets: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for &target in targets {
        match measurement_ratio(naive_curve, nmqa_curve, target) {
            Ok(r) => out.push((target, r)),
            Err(NmqaError::OutOfRange { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
