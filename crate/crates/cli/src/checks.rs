//! Pass / fail / not-applicable checks on a finished run.

use nordstrom_core::blowup::{check_hypotheses, detect_pde_blowup, jensen_gap};
use nordstrom_core::energy::{decay_diagnostics, decay_exponent};
use nordstrom_core::linear::{linear_energy_bound, ForcingProfile};
use nordstrom_core::positivity::{check_positivity_hypotheses, min_one_plus_u};
use nordstrom_core::spectral::{homogeneous_norm, sobolev_norm, WaveState};
use nordstrom_core::{Error, Trajectory};
use serde::Serialize;

use crate::certify::{certify, CertificateView};
use crate::config::{Check, ExperimentConfig};
use crate::error::Result;
use crate::run::Diagnostics;

/// Relative slack for quadrature-based bounds.
pub const BOUND_TOL: f64 = 1e-6;
/// `||u_h||_{H^{m+1}}` over the last quarter of a decay run must stay below this.
pub const DECAY_TOL: f64 = 1e-3;
const JENSEN_TOL: f64 = 1e-12;
const POSITIVITY_PROBES: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckResult {
    fn new(check: Check, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: check.name().into(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            detail: detail.into(),
        }
    }

    pub fn not_applicable(check: Check, detail: impl Into<String>) -> Self {
        Self {
            name: check.name().into(),
            status: CheckStatus::NotApplicable,
            detail: detail.into(),
        }
    }
}

pub fn run_checks(
    config: &ExperimentConfig,
    traj: &Trajectory,
    diag: &Diagnostics,
) -> Result<(Vec<CheckResult>, Option<CertificateView>)> {
    let mut certificate = None;
    let mut out = Vec::with_capacity(config.checks.len());
    for &check in &config.checks {
        let result = match check {
            Check::Energy => energy_check(config, traj, diag)?,
            Check::Gronwall => gronwall_check(diag),
            Check::Decay => decay_check(config, traj)?,
            Check::Blowup => {
                let (result, cert) = blowup_check(config, traj)?;
                certificate = Some(cert);
                result
            }
            Check::Positivity => positivity_check(config, traj)?,
            Check::Jensen => jensen_check(config, traj)?,
        };
        out.push(result);
    }
    Ok((out, certificate))
}

fn initial(traj: &Trajectory) -> &WaveState {
    &traj.states[0]
}

/// `||u(t)||^2_{H^{m+1}}` against the linear estimate driven by the sampled forcing.
fn energy_check(config: &ExperimentConfig, traj: &Trajectory, diag: &Diagnostics) -> Result<CheckResult> {
    let m = config.m;
    let profile = ForcingProfile {
        times: diag.times.clone(),
        homogeneous_sq: diag.forcing.iter().map(|f| homogeneous_norm(f, m).powi(2)).collect(),
        mean_abs: diag.forcing.iter().map(|f| f.mean().abs()).collect(),
    };
    let mut worst: f64 = 0.0;
    for s in &traj.states {
        let norm_sq = sobolev_norm(&s.u, m + 1.0).powi(2);
        let bound = linear_energy_bound(initial(traj), &profile, s.time, m, config.grid.kappa)?;
        worst = worst.max(if bound > 0.0 {
            norm_sq / bound
        } else if norm_sq > 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    let pass = worst <= 1.0 + BOUND_TOL;
    Ok(CheckResult::new(
        Check::Energy,
        pass,
        format!("max ||u||^2 / linear bound = {worst:.6e}"),
    ))
}

fn gronwall_check(diag: &Diagnostics) -> CheckResult {
    let worst = diag
        .energy
        .iter()
        .zip(&diag.gronwall)
        .map(|(e, g)| {
            if *g > 0.0 {
                e / g
            } else if *e > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let mut detail = format!("max E / Gronwall bound = {worst:.6e}");
    for w in &diag.warnings {
        detail.push_str("; ");
        detail.push_str(w);
    }
    CheckResult::new(Check::Gronwall, worst <= 1.0 + BOUND_TOL, detail)
}

fn decay_check(config: &ExperimentConfig, traj: &Trajectory) -> Result<CheckResult> {
    let kappa = config.grid.kappa;
    if traj.blowup_suspected() {
        return Ok(CheckResult::new(
            Check::Decay,
            false,
            "run stopped at suspected blow-up",
        ));
    }
    let report = match decay_diagnostics(traj, &config.source) {
        Ok(r) => r,
        Err(Error::Domain(msg)) => return Ok(CheckResult::not_applicable(Check::Decay, msg)),
        Err(e) => return Err(e.into()),
    };
    let p = &report.profile;
    let t_end = traj.last().time;
    let rate = decay_exponent(&p.times, &p.energy, 2.0 / kappa, t_end)
        .map(|r| format!("{r:.6e}"))
        .unwrap_or_else(|_| "n/a".into());
    let pass = report.decay_limsup < DECAY_TOL;
    Ok(CheckResult::new(
        Check::Decay,
        pass,
        format!(
            "tail sup ||u_h||_H^(m+1) = {:.6e} (limit {DECAY_TOL:e}); fitted rate {rate}; \
             mean tail {:.6e}; metric within band: {} (eps~ = {:.6e}, decay source bound {:.6e})",
            report.decay_limsup,
            report.mean_tail_bound,
            report.metric_within,
            report.epsilon_tilde,
            report.decay_source_bound
        ),
    ))
}

fn blowup_check(config: &ExperimentConfig, traj: &Trajectory) -> Result<(CheckResult, CertificateView)> {
    let grid = config.grid_spec();
    let a0 = config.source.lower_bound(grid, config.t_end)?;
    let init = initial(traj);
    let (f0, g0) = (init.u.mean(), init.u_t.mean());
    let flags = check_hypotheses(a0, &init.u, &init.u_t, config.grid.kappa)?;
    let cert = certify(a0, f0, g0, config.grid.kappa)?.with_grid_hypotheses(flags);
    let detected = detect_pde_blowup(traj).time;
    let seen = match detected {
        Some(t) => format!("blow-up detected at t = {t:.6e}"),
        None => "no blow-up detected".into(),
    };
    let result = match (cert.certifies_blowup, cert.t0) {
        (true, Some(t0)) if detected.is_some_and(|t| t <= t0) => {
            CheckResult::new(Check::Blowup, true, format!("{seen}, bound t0 = {t0:.6e}"))
        }
        (true, Some(t0)) if config.t_end < t0 => CheckResult::not_applicable(
            Check::Blowup,
            format!("{seen}; horizon {} ends before the bound t0 = {t0:.6e}", config.t_end),
        ),
        (true, Some(t0)) => CheckResult::new(Check::Blowup, false, format!("{seen}, bound t0 = {t0:.6e}")),
        _ => CheckResult::not_applicable(
            Check::Blowup,
            format!(
                "not certified: {}; {seen}",
                cert.reason.as_deref().unwrap_or("no bound")
            ),
        ),
    };
    Ok((result, cert))
}

fn positivity_check(config: &ExperimentConfig, traj: &Trajectory) -> Result<CheckResult> {
    let init = initial(traj);
    let probes: Vec<f64> = (0..POSITIVITY_PROBES)
        .map(|i| config.t_end * i as f64 / (POSITIVITY_PROBES - 1) as f64)
        .collect();
    let flags = check_positivity_hypotheses(&init.u, &init.u_t, &config.source, &probes)?;
    let low = min_one_plus_u(traj)?;
    let seen = format!("min(1 + u) = {:.6e} at t = {:.6e}", low.value, low.time);
    if !flags.all() {
        return Ok(CheckResult::not_applicable(
            Check::Positivity,
            format!("hypotheses fail; {seen}"),
        ));
    }
    Ok(CheckResult::new(Check::Positivity, low.value > 0.0, seen))
}

fn jensen_check(config: &ExperimentConfig, traj: &Trajectory) -> Result<CheckResult> {
    let a0 = config.source.lower_bound(config.grid_spec(), config.t_end)?;
    if a0 < 0.0 {
        return Ok(CheckResult::not_applicable(
            Check::Jensen,
            format!("source floor {a0:.6e} is negative"),
        ));
    }
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    for s in &traj.states {
        let (lhs, rhs) = match jensen_gap(&s.u, &config.source, s.time, a0) {
            Ok(pair) => pair,
            Err(Error::Domain(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        checked += 1;
        worst = worst.max((rhs - lhs) / rhs.abs().max(1.0));
    }
    if checked == 0 {
        return Ok(CheckResult::not_applicable(Check::Jensen, "no sample has 1 + u >= 0"));
    }
    Ok(CheckResult::new(
        Check::Jensen,
        worst <= JENSEN_TOL,
        format!("{checked} samples, max relative shortfall {worst:.6e}"),
    ))
}
