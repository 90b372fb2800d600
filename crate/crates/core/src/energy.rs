//! Energy of the oscillating part `u_h = u - mean(u)` and its decay.
//!
//! `V = (d/dt u_h + kappa u_h, grad u_h)` and `E = ||V||^2_{H^m}`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::spectral::{
    gradient, homogeneous_norm, homogeneous_norm_sq, project_mean, sobolev_norm, CubicSource, SourceSpec,
    SpectralField, WaveState,
};
use crate::trajectory::Trajectory;

/// Relative slack allowed when comparing `E(t)` with `E(0)`.
pub const MONOTONE_TOL: f64 = 1e-8;
/// Sample gaps above this make the Gronwall quadrature coarse.
pub const MAX_QUADRATURE_GAP: f64 = 0.25;

/// The four components of `V`.
pub fn assemble_v(state: &WaveState, kappa: f64) -> Result<[SpectralField; 4]> {
    let (_, uh) = project_mean(&state.u);
    let (_, uth) = project_mean(&state.u_t);
    let first = uth.axpy(kappa, &uh)?;
    let [a, b, c] = gradient(&uh);
    Ok([first, a, b, c])
}

pub fn energy(state: &WaveState, kappa: f64, m: f64) -> Result<f64> {
    Ok(assemble_v(state, kappa)?
        .iter()
        .map(|v| homogeneous_norm_sq(v, m))
        .sum())
}

/// Squared right-hand side of the Gronwall estimate for `sqrt(E)` at `times[i]`
/// for every `i`, starting from `E(times[0]) = e0`. The integrals use the
/// trapezoidal rule on the samples.
pub fn gronwall_bound(e0: f64, times: &[f64], uh_norms: &[f64], source_norms: &[f64], kappa: f64) -> Result<Vec<f64>> {
    if times.len() != uh_norms.len() || times.len() != source_norms.len() {
        return Err(invalid("sample arrays differ in length"));
    }
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let t0 = times[0];
    let q = |i: usize| kappa * kappa * uh_norms[i] + (-kappa * times[i]).exp() * source_norms[i];
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(times.len());
    out.push(e0);
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        let decay = (-kappa * h).exp();
        integral = decay * integral + 0.5 * h * (decay * q(i - 1) + q(i));
        let root = (-kappa * (times[i] - t0)).exp() * e0.sqrt() + integral;
        out.push(root * root);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    /// `(g^2)'/2 <= A g^2 + f g` held at every interior sample.
    pub hypothesis_holds: bool,
    /// `g(t) <= exp(int A) g(t0) + int exp(int_s^t A) f ds` held at every sample.
    pub bound_holds: bool,
    /// Largest relative excess of `g` over its bound.
    pub max_violation: f64,
}

/// Numerical check of the Gronwall lemma on sampled `g`, `A` and `f`.
pub fn gronwall_lemma_check(times: &[f64], g: &[f64], a: &[f64], f: &[f64], tol: f64) -> Result<LemmaCheck> {
    let n = times.len();
    if g.len() != n || a.len() != n || f.len() != n {
        return Err(invalid("sample arrays differ in length"));
    }
    if n < 3 {
        return Err(invalid("need at least three samples"));
    }
    let mut hypothesis_holds = true;
    for i in 1..n - 1 {
        let lhs = 0.5 * (g[i + 1] * g[i + 1] - g[i - 1] * g[i - 1]) / (times[i + 1] - times[i - 1]);
        let rhs = a[i] * g[i] * g[i] + f[i] * g[i];
        let scale = lhs.abs().max(rhs.abs()).max(1e-300);
        if lhs > rhs + tol * scale {
            hypothesis_holds = false;
        }
    }
    // integral form with cumulative trapezoid
    let mut int_a = vec![0.0; n];
    for i in 1..n {
        int_a[i] = int_a[i - 1] + 0.5 * (times[i] - times[i - 1]) * (a[i] + a[i - 1]);
    }
    let mut forced = 0.0;
    let mut max_violation: f64 = 0.0;
    for i in 1..n {
        let h = times[i] - times[i - 1];
        let step = (int_a[i] - int_a[i - 1]).exp();
        forced = step * forced + 0.5 * h * (step * f[i - 1] + f[i]);
        let bound = int_a[i].exp() * g[0] + forced;
        let excess = (g[i] - bound) / bound.abs().max(1e-300);
        max_violation = max_violation.max(excess);
    }
    Ok(LemmaCheck {
        hypothesis_holds,
        bound_holds: max_violation <= tol,
        max_violation,
    })
}

/// Per-sample diagnostics along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub gronwall: Vec<f64>,
    /// `||u||_{H^{m+1}}`
    pub sobolev_norm: Vec<f64>,
    /// `||u_h||_{H^{m+1}}`
    pub homogeneous_norm: Vec<f64>,
    pub mean: Vec<f64>,
    pub min_one_plus_u: Vec<f64>,
    pub max_one_plus_u: Vec<f64>,
    /// `||a (1 + u)^3||_{H^m}`
    pub source_norm: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn energy_profile(trajectory: &Trajectory, source: &SourceSpec) -> Result<EnergyProfile> {
    if trajectory.is_empty() {
        return Err(invalid("empty trajectory"));
    }
    let grid = trajectory.grid();
    let kappa = grid.kappa;
    let m = grid.sobolev_order_m;
    let cubic = CubicSource::new(source, grid)?;
    let mut p = EnergyProfile {
        times: Vec::new(),
        energy: Vec::new(),
        gronwall: Vec::new(),
        sobolev_norm: Vec::new(),
        homogeneous_norm: Vec::new(),
        mean: Vec::new(),
        min_one_plus_u: Vec::new(),
        max_one_plus_u: Vec::new(),
        source_norm: Vec::new(),
        warnings: Vec::new(),
    };
    let mut uh_m = Vec::new();
    for s in &trajectory.states {
        let eval = cubic.eval_detailed(s.time, &s.u)?;
        p.times.push(s.time);
        p.energy.push(energy(s, kappa, m)?);
        p.sobolev_norm.push(sobolev_norm(&s.u, m + 1.0));
        p.homogeneous_norm.push(homogeneous_norm(&s.u, m + 1.0));
        p.mean.push(s.u.mean());
        p.min_one_plus_u.push(eval.min_one_plus_u);
        p.max_one_plus_u.push(eval.max_one_plus_u);
        p.source_norm.push(sobolev_norm(&eval.source, m));
        uh_m.push(homogeneous_norm(&s.u, m));
    }
    p.gronwall = gronwall_bound(p.energy[0], &p.times, &uh_m, &p.source_norm, kappa)?;
    let gap = p.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if gap > MAX_QUADRATURE_GAP {
        p.warnings.push(format!(
            "sample gap {gap} exceeds {MAX_QUADRATURE_GAP}; Gronwall quadrature is coarse"
        ));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub profile: EnergyProfile,
    /// Largest `||u_h||_{H^{m+1}}` over the last quarter of the samples.
    pub decay_limsup: f64,
    /// Largest `|mean(u)|` over the last quarter of the samples.
    pub mean_tail_bound: f64,
    /// `(min, max)` of `(1 + u)^2` at the final sample.
    pub metric_ratio: (f64, f64),
    /// `alpha beta eps1 / 3` with `alpha = ||V(0)||_{H^m}`.
    pub epsilon_tilde: f64,
    /// `metric_ratio` lies within `[(1 - eps~)^2, (1 + eps~)^2]`.
    pub metric_within: bool,
    /// `2 alpha beta kappa^2 eps1 / (6 C)` with `C` the largest `(1 + u)^3` seen.
    /// Sources below this keep the mean inside the metric band.
    pub decay_source_bound: f64,
    pub monotone: bool,
}

/// Default `beta` and `eps1` of the decay argument.
pub fn decay_constants(kappa: f64) -> (f64, f64) {
    let beta = 0.5 * (1.0 + 1.0 / kappa);
    let eps1 = 0.5 * (beta - 1.0).min(8.0 / (beta + 4.0));
    (beta, eps1)
}

pub fn decay_diagnostics(trajectory: &Trajectory, source: &SourceSpec) -> Result<EnergyReport> {
    let grid = trajectory.grid();
    let kappa = grid.kappa;
    let t_end = trajectory.last().time;
    let span = t_end - trajectory.states[0].time;
    if span < 10.0 / kappa {
        return Err(domain(format!(
            "decay diagnostics need a time span of at least 10/kappa = {}, got {span}",
            10.0 / kappa
        )));
    }
    let profile = energy_profile(trajectory, source)?;
    let n = profile.times.len();
    let tail = (n - n * 3 / 4).max(1);
    let start = n - tail;
    let decay_limsup = profile.homogeneous_norm[start..].iter().copied().fold(0.0, f64::max);
    let mean_tail_bound = profile.mean[start..].iter().map(|v| v.abs()).fold(0.0, f64::max);
    let lo = profile.min_one_plus_u[n - 1];
    let hi = profile.max_one_plus_u[n - 1];
    let metric_ratio = if lo <= 0.0 && hi >= 0.0 {
        (0.0, (lo * lo).max(hi * hi))
    } else {
        ((lo * lo).min(hi * hi), (lo * lo).max(hi * hi))
    };
    let (beta, eps1) = decay_constants(kappa);
    let alpha = profile.energy[0].sqrt();
    let epsilon_tilde = alpha * beta * eps1 / 3.0;
    let metric_within =
        metric_ratio.0 >= (1.0 - epsilon_tilde).powi(2) && metric_ratio.1 <= (1.0 + epsilon_tilde).powi(2);
    let cube_max = profile
        .max_one_plus_u
        .iter()
        .chain(&profile.min_one_plus_u)
        .map(|w| w.abs().powi(3))
        .fold(1.0, f64::max);
    let decay_source_bound = 2.0 * alpha * beta * kappa * kappa * eps1 / (6.0 * cube_max);
    let e0 = profile.energy[0];
    let monotone = profile.energy.iter().all(|&e| e <= e0 * (1.0 + MONOTONE_TOL));
    Ok(EnergyReport {
        profile,
        decay_limsup,
        mean_tail_bound,
        metric_ratio,
        epsilon_tilde,
        metric_within,
        decay_source_bound,
        monotone,
    })
}

/// `E(t) <= E(0) (1 + 1e-8)` at every sample.
pub fn monotone_energy_check(trajectory: &Trajectory) -> Result<bool> {
    let grid = trajectory.grid();
    let e0 = energy(&trajectory.states[0], grid.kappa, grid.sobolev_order_m)?;
    for s in &trajectory.states {
        let e = energy(s, grid.kappa, grid.sobolev_order_m)?;
        if !(e <= e0 * (1.0 + MONOTONE_TOL)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Least-squares slope of `-log(sqrt(E))` over samples in `[t_from, t_to]`.
pub fn decay_exponent(times: &[f64], energy: &[f64], t_from: f64, t_to: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energy)
        .filter(|(t, e)| **t >= t_from && **t <= t_to && **e > 0.0)
        .map(|(t, e)| (*t, 0.5 * e.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(invalid("not enough positive samples for a decay fit"));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(-sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;

    #[test]
    fn cosine_energy() {
        let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
        let u = SpectralField::from_fn(grid, |x| x[0].cos());
        let s = WaveState::new(0.0, u, SpectralField::zeros(grid)).unwrap();
        assert!((energy(&s, 0.5, 2.0).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn lemma_equality_case() {
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.005).collect();
        let g: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        let a = vec![-1.0; times.len()];
        let f = vec![0.0; times.len()];
        let c = gronwall_lemma_check(&times, &g, &a, &f, 1e-6).unwrap();
        assert!(c.hypothesis_holds && c.bound_holds, "{c:?}");
    }

    #[test]
    fn decay_constants_at_half() {
        let (beta, eps1) = decay_constants(0.5);
        assert_eq!(beta, 1.5);
        assert_eq!(eps1, 0.25);
    }
}
