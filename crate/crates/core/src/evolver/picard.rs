use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linear::solve_linear_sampled;
use crate::spectral::{sobolev_norm, CubicSource, SourceSpec, SpectralField, WaveState};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardOptions {
    /// Radius of the ball in `sup_t H^{m+1}` the iterates must stay in.
    pub radius: f64,
    /// Stop once successive iterates are this close in `sup_t H^{m+1}`.
    pub tol: f64,
    pub max_iter: usize,
    /// Uniform time samples, endpoints included.
    pub samples: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            radius: 1.0,
            tol: 1e-10,
            max_iter: 50,
            samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PicardStatus {
    Converged,
    NotConverged,
    /// An iterate left the ball or stopped being finite.
    Diverged {
        iteration: usize,
        sup_norm: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    /// Applications of the solution map after which the iterate stopped moving.
    pub iterates: usize,
    /// Ratios of successive iterate distances.
    pub contraction_factors: Vec<f64>,
    /// Last distance between successive iterates.
    pub final_residual: f64,
    pub converged: bool,
    pub status: PicardStatus,
    /// `sup_t ||u(t)||_{H^{m+1}}` of the returned trajectory.
    pub sup_norm: f64,
}

fn sup_distance(a: &[WaveState], b: &[WaveState], m1: f64) -> f64 {
    a.par_iter()
        .zip(b.par_iter())
        .map(|(x, y)| {
            let d: Vec<_> = x.u.coeffs.iter().zip(&y.u.coeffs).map(|(p, q)| p - q).collect();
            sobolev_norm(
                &SpectralField {
                    grid: x.u.grid,
                    coeffs: d,
                },
                m1,
            )
        })
        .reduce(|| 0.0, f64::max)
}

/// Fixed point of `v -> L(v)`, where `L(v)` solves the linear problem with
/// forcing `a (1 + v)^3`. The forcing is sampled on a uniform time grid and
/// interpolated cubically between samples.
pub fn picard_solve(
    initial: &WaveState,
    source: &SourceSpec,
    t_end: f64,
    opts: &PicardOptions,
) -> Result<(Trajectory, PicardReport)> {
    let grid = initial.grid();
    grid.validate()?;
    let m1 = grid.sobolev_order_m + 1.0;
    if opts.samples < 4 {
        return Err(invalid("Picard iteration needs at least four time samples"));
    }
    if opts.max_iter == 0 {
        return Err(invalid("max_iter must be positive"));
    }
    let start_norm = sobolev_norm(&initial.u, m1);
    if !(opts.radius > start_norm) {
        return Err(invalid(format!(
            "ball radius {} must exceed the initial norm {start_norm}",
            opts.radius
        )));
    }
    let t0 = initial.time;
    if !(t_end > t0) {
        return Err(invalid(format!("end time {t_end} must exceed {t0}")));
    }
    let count = opts.samples;
    let h = (t_end - t0) / (count - 1) as f64;
    let times: Vec<f64> = (0..count)
        .map(|j| if j + 1 == count { t_end } else { t0 + j as f64 * h })
        .collect();
    let cubic = CubicSource::new(source, grid)?;
    let zero_source = source.is_zero();

    let mut current: Vec<WaveState> = times
        .iter()
        .map(|&t| WaveState {
            time: t,
            u: initial.u.clone(),
            u_t: SpectralField::zeros(grid),
        })
        .collect();
    let mut factors = Vec::new();
    let mut last_distance: Option<f64> = None;
    for iteration in 1..=opts.max_iter {
        let forcing: Vec<SpectralField> = if zero_source {
            vec![SpectralField::zeros(grid); count]
        } else {
            current
                .par_iter()
                .map(|s| cubic.eval(s.time, &s.u))
                .collect::<Result<_>>()?
        };
        let next = solve_linear_sampled(initial, &times, &forcing)?;
        let distance = sup_distance(&next, &current, m1);
        let sup_norm = next.par_iter().map(|s| sobolev_norm(&s.u, m1)).reduce(
            || 0.0,
            |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) },
        );
        if let Some(prev) = last_distance {
            if prev > 0.0 {
                factors.push(distance / prev);
            }
        }
        last_distance = Some(distance);
        if !sup_norm.is_finite() || sup_norm > opts.radius {
            let report = PicardReport {
                iterates: iteration,
                contraction_factors: factors,
                final_residual: distance,
                converged: false,
                status: PicardStatus::Diverged { iteration, sup_norm },
                sup_norm,
            };
            return Ok((Trajectory::complete(next), report));
        }
        current = next;
        if distance <= opts.tol {
            let report = PicardReport {
                iterates: (iteration - 1).max(1),
                contraction_factors: factors,
                final_residual: distance,
                converged: true,
                status: PicardStatus::Converged,
                sup_norm,
            };
            return Ok((Trajectory::complete(current), report));
        }
    }
    let sup_norm = current.iter().map(|s| sobolev_norm(&s.u, m1)).fold(0.0, f64::max);
    let report = PicardReport {
        iterates: opts.max_iter,
        contraction_factors: factors,
        final_residual: last_distance.unwrap_or(f64::NAN),
        converged: false,
        status: PicardStatus::NotConverged,
        sup_norm,
    };
    Ok((Trajectory::complete(current), report))
}
