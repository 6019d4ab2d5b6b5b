//! `nmqa` command-line entry point.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nmqa_cli::commands::{cmd_replay, cmd_simulate, cmd_tune};
use nmqa_cli::validate::{run_validation, validation_report};
use nmqa_cli::{exit_code_for, RunConfig, EXIT_NUMERICAL};

#[derive(Parser)]
#[command(
    name = "nmqa",
    version,
    about = "Noise-mapping benchmark harness: adaptive filter vs naive sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep both strategies over a synthetic field and write the curves
    Simulate(RunArgs),
    /// Sweep both strategies against a recorded data-bank CSV
    Replay(RunArgs),
    /// Random-search the sharing weights (lambda1, lambda2)
    Tune(TuneArgs),
    /// Run the fast numerical invariant suite
    Validate,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment manifest (TOML); omitted keys take the documented defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the manifest)
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the manifest)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per (strategy, T) cell (overrides the manifest)
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads for sweep runs; 0 means one per core
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Data-bank CSV for replay (overrides the manifest)
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Set one manifest key, e.g. --set lambda1=0.5 (repeatable; flags win)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Number of random (lambda1, lambda2) candidates
    #[arg(long, default_value_t = 50)]
    pairs: usize,
}

/// Manifest file, then `--set` overrides, then dedicated flags.
fn effective_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for entry in &args.sets {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            nmqa_cli::ConfigError::new(format!("--set {entry:?}: expected KEY=VALUE"))
        })?;
        cfg.apply_override(key.trim(), value.trim())?;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(bank) = &args.bank {
        cfg.databank = Some(bank.clone());
    }
    Ok(cfg)
}

fn print_sweep(report: &nmqa_cli::SweepReport) {
    for e in report.scoreboard.entries() {
        println!(
            "{:<6} T={:<5} avg_ssim={:.4} std={:.4} trials={}",
            e.strategy.to_string(),
            e.t_total,
            e.avg_ssim,
            e.std,
            e.trials
        );
    }
    if report.aborted > 0 {
        eprintln!(
            "warning: {} runs aborted on degenerate weights and were scored 1.0 \
             (flagged valid=false in run_records.json)",
            report.aborted
        );
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = effective_config(&args)?;
            print_sweep(&cmd_simulate(&cfg, args.threads)?);
            Ok(0)
        }
        Command::Replay(args) => {
            let cfg = effective_config(&args)?;
            print_sweep(&cmd_replay(&cfg, args.threads)?);
            Ok(0)
        }
        Command::Tune(args) => {
            let cfg = effective_config(&args.run)?;
            let report = cmd_tune(&cfg, args.pairs)?;
            let best = &report.result.best;
            let improved = report.result.candidates.iter().filter(|c| c.improved).count();
            println!(
                "baseline (0, 0): avg_ssim={:.4}",
                report.result.baseline.avg_ssim
            );
            println!(
                "best pair: lambda1={:.4} lambda2={:.4} avg_ssim={:.4} ({improved} of {} candidates improved)",
                best.lambda1,
                best.lambda2,
                best.avg_ssim,
                report.result.candidates.len()
            );
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            Ok(0)
        }
        Command::Validate => {
            let (text, all_passed) = validation_report(&run_validation());
            print!("{text}");
            Ok(if all_passed { 0 } else { EXIT_NUMERICAL })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
