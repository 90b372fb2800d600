use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral::{laplacian, sobolev_norm, CubicSource, SourceSpec, SpectralField};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub times: Vec<f64>,
    /// `H^m` norm of the residual at each interior sample.
    pub norms: Vec<f64>,
    pub max: f64,
}

/// `H^m` norm of `u_tt + 2 kappa u_t - Laplace(u) - exp(-kappa t) a (1 + u)^3`
/// at interior samples, with `u_tt` from central differences of the stored
/// `u_t` (fourth order with five or more samples, second order otherwise).
pub fn pde_residual(trajectory: &Trajectory, source: &SourceSpec) -> Result<ResidualReport> {
    let states = &trajectory.states;
    let count = states.len();
    if count < 3 {
        return Err(invalid("residual needs at least three samples"));
    }
    let grid = trajectory.grid();
    let kappa = grid.kappa;
    let m = grid.sobolev_order_m;
    let h = (states[count - 1].time - states[0].time) / (count - 1) as f64;
    for w in states.windows(2) {
        let gap = w[1].time - w[0].time;
        if (gap - h).abs() > 1e-9 * h.max(1.0) {
            return Err(invalid("residual needs uniformly spaced samples"));
        }
    }
    let cubic = CubicSource::new(source, grid)?;
    let fourth = count >= 5;
    let range = if fourth { 2..count - 2 } else { 1..count - 1 };
    let mut times = Vec::new();
    let mut norms = Vec::new();
    for j in range {
        let s = &states[j];
        let mut utt = SpectralField::zeros(grid);
        for (i, c) in utt.coeffs.iter_mut().enumerate() {
            let d = |o: isize| states[(j as isize + o) as usize].u_t.coeffs[i];
            *c = if fourth {
                (-d(2) + d(1) * 8.0 - d(-1) * 8.0 + d(-2)) / (12.0 * h)
            } else {
                (d(1) - d(-1)) / (2.0 * h)
            };
        }
        let forcing = cubic.eval(s.time, &s.u)?.scaled((-kappa * s.time).exp());
        let r = utt.axpy(2.0 * kappa, &s.u_t)?.sub(&laplacian(&s.u))?.sub(&forcing)?;
        times.push(s.time);
        norms.push(sobolev_norm(&r, m));
    }
    let max = norms.iter().copied().fold(0.0, f64::max);
    Ok(ResidualReport { times, norms, max })
}
