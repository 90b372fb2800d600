use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linear::ModeRoots;
use crate::spectral::{sobolev_norm, tail_fraction, CubicSource, SourceSpec, SpectralField, WaveState};
use crate::trajectory::{Trajectory, TrajectoryStatus};

/// `H^{m+1}` norm beyond which a run is treated as blowing up.
pub const OVERFLOW_NORM: f64 = 1e8;
/// Tail share (see [`tail_fraction`]) at which a growing run counts as unresolved.
pub const MAX_TAIL_FRACTION: f64 = 0.1;
/// The tail check only applies once the norm has grown by this factor over `max(1, initial)`.
const TAIL_GROWTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimestepOptions {
    pub dt: f64,
    /// Keep every `record_every`-th step (the first and last are always kept).
    pub record_every: usize,
    pub overflow_norm: f64,
    /// Set to 1 or more to disable the resolution check.
    pub max_tail_fraction: f64,
}

impl TimestepOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            record_every: 1,
            overflow_norm: OVERFLOW_NORM,
            max_tail_fraction: MAX_TAIL_FRACTION,
        }
    }

    pub fn record_every(mut self, stride: usize) -> Self {
        self.record_every = stride.max(1);
        self
    }
}

/// `int_0^h exp(mu (h - s)) ds` and `int_0^h exp(mu (h - s)) s ds`.
fn phi_weights(mu: Complex64, h: f64) -> (Complex64, Complex64) {
    let z = mu * h;
    if z.norm() < 0.1 {
        // series in z
        let mut p0 = Complex64::default();
        let mut p1 = Complex64::default();
        let mut term = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for j in 0..20 {
            p0 += term / (fact * (j as f64 + 1.0));
            p1 += term / (fact * (j as f64 + 1.0) * (j as f64 + 2.0));
            term *= z;
            fact *= j as f64 + 1.0;
        }
        (p0 * h, p1 * h * h)
    } else {
        let e = z.exp();
        ((e - 1.0) / mu, (e - 1.0 - z) / (mu * mu))
    }
}

struct StepClass {
    /// rows: (u, u_t) from u; (u, u_t) from u_t
    prop: [[Complex64; 2]; 2],
    roots: ModeRoots,
    phi0: [Complex64; 2],
    phi1: [Complex64; 2],
}

impl StepClass {
    fn new(k2: f64, kappa: f64, h: f64) -> Self {
        let roots = ModeRoots::new(k2, kappa);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        let (a, b) = roots.propagate(one, zero, h);
        let (c, d) = roots.propagate(zero, one, h);
        let (p01, p11) = phi_weights(roots.mu1, h);
        let (p02, p12) = phi_weights(roots.mu2, h);
        Self {
            prop: [[a, b], [c, d]],
            roots,
            phi0: [p01, p02],
            phi1: [p11, p12],
        }
    }

    /// Advances one mode with source `n0 + (n1 - n0) s / h` over the step.
    fn advance(&self, u: Complex64, ut: Complex64, n0: Complex64, slope: Complex64) -> (Complex64, Complex64) {
        let hu = u * self.prop[0][0] + ut * self.prop[1][0];
        let hut = u * self.prop[0][1] + ut * self.prop[1][1];
        let j1 = self.phi0[0] * n0 + self.phi1[0] * slope;
        let j2 = self.phi0[1] * n0 + self.phi1[1] * slope;
        let (pu, put) = self.roots.duhamel(j1, j2);
        (hu + pu, hut + put)
    }
}

/// Second-order exponential integrator: exact propagation of every mode plus a
/// predictor-corrector treatment of the Duhamel integral.
///
/// The step is shrunk so that a whole number of steps reaches `t_end`. The run
/// stops early once `||u||_{H^{m+1}}` exceeds the overflow norm or stops being finite,
/// or once a grown solution pushes too much mass into the outer third of the spectrum.
pub fn timestep_solve(
    initial: &WaveState,
    source: &SourceSpec,
    t_end: f64,
    opts: &TimestepOptions,
) -> Result<Trajectory> {
    let grid = initial.grid();
    grid.validate()?;
    let kappa = grid.kappa;
    let m1 = grid.sobolev_order_m + 1.0;
    let t0 = initial.time;
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(invalid(format!("dt must be positive, got {}", opts.dt)));
    }
    if !(t_end > t0) {
        return Err(invalid(format!("end time {t_end} must exceed {t0}")));
    }
    let steps = ((t_end - t0) / opts.dt - 1e-9).ceil().max(1.0) as usize;
    let h = (t_end - t0) / steps as f64;
    let cubic = CubicSource::new(source, grid)?;
    let zero_source = source.is_zero();

    let mut class_index: HashMap<i64, usize> = HashMap::new();
    let mut classes: Vec<StepClass> = Vec::new();
    let class_of: Vec<usize> = (0..grid.len())
        .map(|i| {
            let k2 = grid.wavevector(i).norm2();
            *class_index.entry(k2).or_insert_with(|| {
                classes.push(StepClass::new(k2 as f64, kappa, h));
                classes.len() - 1
            })
        })
        .collect();

    let source_at = |t: f64, u: &SpectralField| -> Result<SpectralField> {
        if zero_source {
            Ok(SpectralField::zeros(grid))
        } else {
            Ok(cubic.eval(t, u)?.scaled((-kappa * t).exp()))
        }
    };
    let advance = |state: &WaveState, n0: &SpectralField, n1: Option<&SpectralField>, t: f64| {
        let (u, ut): (Vec<_>, Vec<_>) = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let slope = match n1 {
                    Some(n1) => (n1.coeffs[i] - n0.coeffs[i]) / h,
                    None => Complex64::default(),
                };
                classes[class_of[i]].advance(state.u.coeffs[i], state.u_t.coeffs[i], n0.coeffs[i], slope)
            })
            .unzip();
        WaveState {
            time: t,
            u: SpectralField { grid, coeffs: u },
            u_t: SpectralField { grid, coeffs: ut },
        }
    };
    let overflowed = |s: &WaveState| {
        let norm = sobolev_norm(&s.u, m1);
        !(norm.is_finite() && s.u_t.is_finite()) || norm > opts.overflow_norm
    };

    let growth_floor = TAIL_GROWTH * sobolev_norm(&initial.u, m1).max(1.0);
    let unresolved =
        |s: &WaveState| sobolev_norm(&s.u, m1) > growth_floor && tail_fraction(&s.u) > opts.max_tail_fraction;

    let mut states = vec![initial.clone()];
    let mut state = initial.clone();
    let mut n_now = source_at(t0, &state.u)?;
    for step in 1..=steps {
        let t = if step == steps { t_end } else { t0 + step as f64 * h };
        let predicted = advance(&state, &n_now, None, t);
        let stop = |reason: &str, states: &mut Vec<WaveState>, state: &WaveState| {
            if states.last().map(|s| s.time) != Some(state.time) {
                states.push(state.clone());
            }
            TrajectoryStatus::BlowupSuspected {
                last_time: state.time,
                detected_time: t,
                reason: reason.to_string(),
            }
        };
        if overflowed(&predicted) {
            let status = stop("norm overflow in predictor", &mut states, &state);
            return Ok(Trajectory { states, status });
        }
        let n_pred = source_at(t, &predicted.u)?;
        let corrected = advance(&state, &n_now, Some(&n_pred), t);
        if overflowed(&corrected) {
            let status = stop("norm overflow", &mut states, &state);
            return Ok(Trajectory { states, status });
        }
        if unresolved(&corrected) {
            let status = stop("resolution lost", &mut states, &state);
            return Ok(Trajectory { states, status });
        }
        state = corrected;
        n_now = source_at(t, &state.u)?;
        if step % opts.record_every == 0 || step == steps {
            states.push(state.clone());
        }
    }
    Ok(Trajectory::complete(states))
}
