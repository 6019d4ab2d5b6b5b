//! Output files. Every artifact embeds the effective manifest and master
//! seed so any figure can be traced back to the exact experiment that
//! produced it; CSVs carry it as `#`-prefixed header lines, JSON as a
//! `config` object.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use nmqa::control::RunRecord;
use nmqa::metrics::Scoreboard;
use nmqa::tuner::TuningResult;
use nmqa::{NmqaError, Result};

use crate::config::RunConfig;

/// The effective manifest as `# `-prefixed TOML lines.
pub fn snapshot_header(cfg: &RunConfig) -> String {
    let toml = toml::to_string_pretty(cfg).expect("manifest serializes");
    let mut out = String::from("# effective configuration:\n");
    for line in toml.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, File)> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, file))
}

/// `scoreboard.csv`: one row per (strategy, T) cell.
pub fn write_scoreboard(dir: &Path, cfg: &RunConfig, board: &Scoreboard) -> Result<PathBuf> {
    let (path, mut file) = create(dir, "scoreboard.csv")?;
    file.write_all(snapshot_header(cfg).as_bytes())?;
    board.write_csv(&mut file)?;
    file.flush()?;
    Ok(path)
}

/// `ratio_curve.csv`: measurement ratio per attainable target score.
pub fn write_ratio_curve(dir: &Path, cfg: &RunConfig, points: &[(f64, f64)]) -> Result<PathBuf> {
    let (path, mut file) = create(dir, "ratio_curve.csv")?;
    file.write_all(snapshot_header(cfg).as_bytes())?;
    writeln!(file, "target_avg_ssim,ratio")?;
    for (target, ratio) in points {
        writeln!(file, "{target},{ratio}")?;
    }
    file.flush()?;
    Ok(path)
}

/// `run_records.json`: every run of the sweep, with the manifest.
pub fn write_run_records(dir: &Path, cfg: &RunConfig, records: &[RunRecord]) -> Result<PathBuf> {
    let (path, file) = create(dir, "run_records.json")?;
    let doc = serde_json::json!({
        "config": cfg,
        "master_seed": cfg.master_seed,
        "records": records,
    });
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &doc)
        .map_err(|e| NmqaError::InvalidArgument(format!("serializing run records: {e}")))?;
    Ok(path)
}

/// `tuning.csv`: baseline first, then every candidate in evaluation order.
pub fn write_tuning_csv(dir: &Path, cfg: &RunConfig, result: &TuningResult) -> Result<PathBuf> {
    let (path, mut file) = create(dir, "tuning.csv")?;
    file.write_all(snapshot_header(cfg).as_bytes())?;
    writeln!(file, "lambda1,lambda2,avg_ssim,aborted,improved")?;
    for c in std::iter::once(&result.baseline).chain(&result.candidates) {
        writeln!(
            file,
            "{},{},{},{},{}",
            c.lambda1, c.lambda2, c.avg_ssim, c.aborted, c.improved
        )?;
    }
    file.flush()?;
    Ok(path)
}

/// `best_pair.json`: the tuning summary, with the manifest.
pub fn write_best_pair(dir: &Path, cfg: &RunConfig, result: &TuningResult) -> Result<PathBuf> {
    let (path, file) = create(dir, "best_pair.json")?;
    let doc = serde_json::json!({
        "config": cfg,
        "master_seed": cfg.master_seed,
        "baseline": result.baseline,
        "best": result.best,
        "improved": result.candidates.iter().filter(|c| c.improved).count(),
        "improvement_margin": nmqa::tuner::IMPROVEMENT_MARGIN,
    });
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &doc)
        .map_err(|e| NmqaError::InvalidArgument(format!("serializing tuning summary: {e}")))?;
    Ok(path)
}
