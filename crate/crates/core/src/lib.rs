//! Pseudo-spectral solvers and diagnostics for the damped semilinear wave equation
//!
//! ```text
//! u_tt + 2 kappa u_t - Laplace(u) = exp(-kappa t) a(t, x) (1 + u)^3
//! ```
//!
//! on the periodic cube `[0, 2pi)^3`, with `0 < kappa < 1`.

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod energy;
pub mod error;
pub mod evolver;
pub mod linear;
pub mod ode;
pub mod positivity;
pub mod quadrature;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
pub use trajectory::{Trajectory, TrajectoryStatus};
