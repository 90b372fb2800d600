//! Finite-time blow-up for large sources: hypotheses, the analytic blow-up
//! time bound, the reduced mean ODE and detection along PDE runs.
//!
//! With `F(t)` the spatial mean of `u` and `a >= a0 > 0`, the mean obeys
//! `F'' + 2 kappa F' >= exp(-kappa t) a0 (1 + F)^3`. Under the data conditions
//! checked by [`check_hypotheses`] this forces blow-up no later than
//! `t0 = time_map_inverse(tau0)` whenever `tau0 < 2`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::evolver::OVERFLOW_NORM;
use crate::ode::{Advance, Dopri, OdeOptions};
use crate::spectral::{laplacian, sobolev_norm, CubicSource, SourceSpec, SpectralField};
use crate::trajectory::{Trajectory, TrajectoryStatus};

/// Slack for grid sign checks on analytically non-negative data.
pub const SIGN_TOL: f64 = 1e-12;
/// `tau0` closer than this to 2 gives an inconclusive certificate.
pub const TAU_MARGIN: f64 = 1e-12;
/// Smallest admissible blow-up threshold for the reduced ODE.
pub const MIN_THRESHOLD: f64 = 1e6;

pub const REASON_SOURCE: &str = "a0 > 0 required";
pub const REASON_POSITIVE: &str = "1 + f > 0 required";
pub const REASON_LAPLACIAN: &str = "Laplacian of f >= 0 required";
pub const REASON_VELOCITY: &str = "kappa (1 + f) + g >= 0 required";
pub const REASON_MEAN_VELOCITY: &str = "mean of g > 0 required";
pub const REASON_ENERGY: &str = "g0^2 - (a0/2)(1 + f0)^4 <= 0 required";

/// Pass/fail of each blow-up hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    pub source_positive: bool,
    pub one_plus_f_positive: bool,
    pub laplacian_nonnegative: bool,
    pub velocity_nonnegative: bool,
    pub mean_velocity_positive: bool,
    pub energy_condition: bool,
}

impl HypothesisFlags {
    /// Flags for spatially constant data.
    pub fn for_constants(a0: f64, f0: f64, g0: f64, kappa: f64) -> Self {
        Self {
            source_positive: a0 > 0.0,
            one_plus_f_positive: 1.0 + f0 > 0.0,
            laplacian_nonnegative: true,
            velocity_nonnegative: kappa * (1.0 + f0) + g0 >= -SIGN_TOL,
            mean_velocity_positive: g0 > 0.0,
            energy_condition: energy_condition(a0, f0, g0),
        }
    }

    pub fn all(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn failures(&self) -> Vec<&'static str> {
        [
            (self.source_positive, REASON_SOURCE),
            (self.one_plus_f_positive, REASON_POSITIVE),
            (self.laplacian_nonnegative, REASON_LAPLACIAN),
            (self.velocity_nonnegative, REASON_VELOCITY),
            (self.mean_velocity_positive, REASON_MEAN_VELOCITY),
            (self.energy_condition, REASON_ENERGY),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, r)| r)
        .collect()
    }
}

fn energy_condition(a0: f64, f0: f64, g0: f64) -> bool {
    g0 * g0 - 0.5 * a0 * (1.0 + f0).powi(4) <= 0.0
}

/// Checks the hypotheses on the collocation grid of `f`.
pub fn check_hypotheses(a0: f64, f: &SpectralField, g: &SpectralField, kappa: f64) -> Result<HypothesisFlags> {
    f.ensure_same_grid(g)?;
    let fv = f.values()?;
    let gv = g.values()?;
    let lap = laplacian(f).values()?;
    let (f0, g0) = (f.mean(), g.mean());
    Ok(HypothesisFlags {
        source_positive: a0 > 0.0,
        one_plus_f_positive: fv.iter().all(|v| 1.0 + v > 0.0),
        laplacian_nonnegative: lap.iter().all(|&v| v >= -SIGN_TOL),
        velocity_nonnegative: fv.iter().zip(&gv).all(|(f, g)| kappa * (1.0 + f) + g >= -SIGN_TOL),
        mean_velocity_positive: g0 > 0.0,
        energy_condition: energy_condition(a0, f0, g0),
    })
}

/// `2 - exp(-2 kappa t)`, mapping `[0, inf)` onto `[1, 2)`.
pub fn time_map(t: f64, kappa: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(domain(format!("time map needs t >= 0, got {t}")));
    }
    Ok(2.0 - (-2.0 * kappa * t).exp())
}

pub fn time_map_inverse(tau: f64, kappa: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&tau) {
        return Err(domain(format!("inverse time map needs 1 <= tau < 2, got {tau}")));
    }
    Ok(-(2.0 - tau).ln() / (2.0 * kappa))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupCertificate {
    pub a0: f64,
    pub f0_hat: f64,
    pub g0_hat: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub beta: f64,
    /// Blow-up bound in the transformed time; infinite when `beta = 0`.
    pub tau0: f64,
    /// Blow-up bound in real time, present iff `tau0 < 2`.
    pub t0: Option<f64>,
    pub hypotheses: HypothesisFlags,
    pub certifies_blowup: bool,
    /// `tau0` within [`TAU_MARGIN`] of 2.
    pub inconclusive: bool,
    /// First reason the certificate does not apply.
    pub reason: Option<String>,
}

/// Blow-up time bound for data with means `f0`, `g0` and source floor `a0`.
///
/// Fails when `a0 <= 0`, `1 + f0 <= 0` or `lambda^4 < 0`, since the bound is
/// then undefined.
pub fn certificate(a0: f64, f0: f64, g0: f64, kappa: f64) -> Result<BlowupCertificate> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(domain(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    if !(a0 > 0.0) {
        return Err(domain(REASON_SOURCE));
    }
    let base = 1.0 + f0;
    if !(base > 0.0) {
        return Err(domain(REASON_POSITIVE));
    }
    let lambda4 = base.powi(4) - 2.0 * g0 * g0 / a0;
    if lambda4 < 0.0 {
        return Err(domain(REASON_ENERGY));
    }
    let lambda = lambda4.powf(0.25);
    let beta = (base - lambda) / (base + lambda);
    // ln(1/beta) / lambda = 2 atanh(lambda / base) / lambda, finite as lambda -> 0
    let ratio = lambda / base;
    let log_over_lambda = if ratio == 0.0 {
        2.0 / base
    } else if ratio >= 1.0 {
        f64::INFINITY
    } else {
        2.0 * ratio.atanh() / lambda
    };
    let tau0 = std::f64::consts::SQRT_2 * kappa / a0.sqrt() * log_over_lambda + 1.0;
    let t0 = if tau0 < 2.0 {
        Some(time_map_inverse(tau0, kappa)?)
    } else {
        None
    };
    let hypotheses = HypothesisFlags::for_constants(a0, f0, g0, kappa);
    let inconclusive = (tau0 - 2.0).abs() <= TAU_MARGIN;
    let certifies_blowup = hypotheses.all() && tau0 < 2.0 - TAU_MARGIN;
    let reason = if let Some(r) = hypotheses.failures().first() {
        Some(r.to_string())
    } else if inconclusive {
        Some("tau0 within margin of 2, inconclusive".into())
    } else if !certifies_blowup {
        Some(format!("tau0 = {tau0} is not below 2"))
    } else {
        None
    };
    Ok(BlowupCertificate {
        a0,
        f0_hat: f0,
        g0_hat: g0,
        kappa,
        lambda,
        beta,
        tau0,
        t0,
        hypotheses,
        certifies_blowup,
        inconclusive,
        reason,
    })
}

/// Interval known to contain a blow-up time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupBracket {
    /// First time the solution exceeded the threshold.
    pub threshold_time: f64,
    /// Last time the integrator reached.
    pub lower: f64,
    /// `lower` plus twice the local estimate `(1 + F) / F'` of the remaining time.
    pub upper: f64,
}

impl BlowupBracket {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedRun {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub blowup: Option<BlowupBracket>,
}

/// Guard value for the continued integration past the threshold.
const RUNAWAY: f64 = 1e150;

fn reduced_ode<F>(rhs: F, start: f64, end: f64, y0: [f64; 2], threshold: f64, samples: usize) -> Result<ReducedRun>
where
    F: FnMut(f64, &[f64; 2]) -> [f64; 2],
{
    if !(threshold >= MIN_THRESHOLD) {
        return Err(invalid(format!(
            "blow-up threshold must be at least {MIN_THRESHOLD}, got {threshold}"
        )));
    }
    let mut ode = Dopri::new(
        rhs,
        start,
        y0,
        OdeOptions {
            h_init: 1e-4,
            ..Default::default()
        },
    );
    let mut run = ReducedRun {
        times: vec![start],
        values: vec![y0[0]],
        derivatives: vec![y0[1]],
        blowup: None,
    };
    let push = |run: &mut ReducedRun, t: f64, y: [f64; 2]| {
        run.times.push(t);
        run.values.push(y[0]);
        run.derivatives.push(y[1]);
    };
    for i in 1..=samples {
        let target = start + (end - start) * i as f64 / samples as f64;
        match ode.advance_to(target, |_, y| y[0].abs() > threshold) {
            Advance::Reached => push(&mut run, ode.t, ode.y),
            Advance::MaxSteps => return Err(invalid("reduced ODE exceeded its step budget")),
            stop => {
                if stop == Advance::Guard {
                    push(&mut run, ode.t, ode.y);
                }
                let threshold_time = ode.t;
                // run on until the integrator can no longer advance
                ode.advance_to(end, |_, y| y[0].abs() > RUNAWAY);
                let (t, y) = if ode.y.iter().all(|v| v.is_finite()) {
                    (ode.t, ode.y)
                } else {
                    ode.prev
                };
                if t >= end && y[0].abs() <= RUNAWAY {
                    // only a transient excursion past the threshold
                    return Err(invalid("solution exceeded the threshold but stayed finite"));
                }
                let remaining = if y[1] > 0.0 { (1.0 + y[0]).abs() / y[1] } else { 0.0 };
                run.blowup = Some(BlowupBracket {
                    threshold_time,
                    lower: t,
                    upper: (t + 2.0 * remaining).min(end.max(t)),
                });
                return Ok(run);
            }
        }
    }
    Ok(run)
}

/// Integrates `F'' + 2 kappa F' = exp(-kappa t) a0 (1 + F)^3` on `[0, t_max]`
/// and brackets the first blow-up, if any.
pub fn integrate_f_ode(a0: f64, f0: f64, g0: f64, kappa: f64, threshold: f64, t_max: f64) -> Result<ReducedRun> {
    if !(t_max > 0.0) {
        return Err(invalid(format!("t_max must be positive, got {t_max}")));
    }
    let rhs = move |t: f64, y: &[f64; 2]| {
        [
            y[1],
            (-kappa * t).exp() * a0 * (1.0 + y[0]).powi(3) - 2.0 * kappa * y[1],
        ]
    };
    reduced_ode(rhs, 0.0, t_max, [f0, g0], threshold, 2000)
}

/// Same problem in the transformed time `tau = time_map(t)`:
/// `G'' = a0 / (4 kappa^2) exp(3 kappa t(tau)) (1 + G)^3`, `G(1) = f0`,
/// `G'(1) = g0 / (2 kappa)`. Times in the result are mapped back to `t`.
pub fn integrate_g_ode(a0: f64, f0: f64, g0: f64, kappa: f64, threshold: f64, t_max: f64) -> Result<ReducedRun> {
    let tau_max = time_map(t_max, kappa)?;
    let scale = a0 / (4.0 * kappa * kappa);
    // exp(3 kappa t) = (2 - tau)^(-3/2)
    let rhs = move |tau: f64, y: &[f64; 2]| [y[1], scale * (2.0 - tau).powf(-1.5) * (1.0 + y[0]).powi(3)];
    let mut run = reduced_ode(rhs, 1.0, tau_max, [f0, g0 / (2.0 * kappa)], threshold, 2000)?;
    let back = |tau: f64| -(2.0 - tau).ln() / (2.0 * kappa);
    for (tau, d) in run.times.iter_mut().zip(run.derivatives.iter_mut()) {
        // dG/dtau * dtau/dt
        *d *= 2.0 * kappa * (2.0 - *tau);
        *tau = back(*tau);
    }
    if let Some(b) = run.blowup.as_mut() {
        b.threshold_time = back(b.threshold_time);
        b.lower = back(b.lower);
        b.upper = back(b.upper.min(tau_max));
    }
    Ok(run)
}

/// `(mean of a(t) (1 + u)^3, a0 (1 + mean u)^3)`; the first dominates the
/// second when `1 + u >= 0` and `a >= a0`.
pub fn jensen_gap(u: &SpectralField, source: &SourceSpec, t: f64, a0: f64) -> Result<(f64, f64)> {
    let eval = CubicSource::new(source, u.grid)?.eval_detailed(t, u)?;
    if eval.min_one_plus_u < 0.0 {
        return Err(domain(format!(
            "Jensen bound needs 1 + u >= 0, minimum is {}",
            eval.min_one_plus_u
        )));
    }
    Ok((eval.source.mean(), a0 * (1.0 + u.mean()).powi(3)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeBlowup {
    pub time: Option<f64>,
    /// `(t, ||u||_{H^{m+1}})` per sample.
    pub norms: Vec<(f64, f64)>,
    /// `||u||_{H^{m+1}} >= |mean u|` at every sample.
    pub mean_bound_holds: bool,
}

/// First sample where `||u||_{H^{m+1}}` passes the overflow norm, or the
/// stepper's detection time when it stopped the run.
pub fn detect_pde_blowup(trajectory: &Trajectory) -> PdeBlowup {
    let m1 = trajectory.grid().sobolev_order_m + 1.0;
    let mut norms = Vec::with_capacity(trajectory.len());
    let mut mean_bound_holds = true;
    let mut time = None;
    for s in &trajectory.states {
        let norm = sobolev_norm(&s.u, m1);
        let mean = s.u.mean().abs();
        if !(norm >= mean * (1.0 - 1e-14)) {
            mean_bound_holds = false;
        }
        if time.is_none() && !(norm <= OVERFLOW_NORM) {
            time = Some(s.time);
        }
        norms.push((s.time, norm));
    }
    if time.is_none() {
        if let TrajectoryStatus::BlowupSuspected { detected_time, .. } = trajectory.status {
            time = Some(detected_time);
        }
    }
    PdeBlowup {
        time,
        norms,
        mean_bound_holds,
    }
}
