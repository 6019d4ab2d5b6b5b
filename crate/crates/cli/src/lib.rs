//! Benchmark harness around the `nmqa` filter: declarative TOML manifests,
//! deterministic seeded sweeps of both mapping strategies, random-search
//! tuning of the sharing weights, and a fast numerical self-check. All
//! output files embed the effective manifest and master seed.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

pub use commands::{cmd_replay, cmd_simulate, cmd_tune, Experiment, SweepReport, SweepResult};
pub use config::{ConfigError, RunConfig};

/// Exit code for rejected configuration or arguments.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for missing or unreadable input/output files.
pub const EXIT_IO: u8 = 3;
/// Exit code for numerical failures (degenerate weights, failed checks,
/// unattainable inversion targets).
pub const EXIT_NUMERICAL: u8 = 4;

/// Map an error chain onto the documented exit codes.
pub fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return EXIT_CONFIG;
    }
    if let Some(e) = err.downcast_ref::<nmqa::NmqaError>() {
        return match e {
            nmqa::NmqaError::InvalidArgument(_) => EXIT_CONFIG,
            nmqa::NmqaError::Io(_) | nmqa::NmqaError::Format { .. } => EXIT_IO,
            _ => EXIT_NUMERICAL,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_IO;
    }
    EXIT_NUMERICAL
}
