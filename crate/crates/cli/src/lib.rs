//! Experiment runner: JSON configs in, CSV / JSON / SVG out.

pub mod certify;
pub mod checks;
pub mod config;
pub mod error;
pub mod run;
pub mod svg;
pub mod sweep;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use run::{run_experiment, RunReport};

/// Thread budget: `NORDSTROM_THREADS` when it holds a positive integer,
/// otherwise the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var("NORDSTROM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}
