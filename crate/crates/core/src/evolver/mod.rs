//! Nonlinear solvers: Picard iteration of the Duhamel map, an exponential
//! time-stepper, smallness thresholds and a residual check.

mod picard;
mod residual;
mod thresholds;
mod timestep;

pub use picard::{picard_solve, PicardOptions, PicardReport, PicardStatus};
pub use residual::{pde_residual, ResidualReport};
pub use thresholds::{compute_thresholds, ThresholdReport};
pub use timestep::{timestep_solve, TimestepOptions, MAX_TAIL_FRACTION, OVERFLOW_NORM};
