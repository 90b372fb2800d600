//! One experiment: solve, diagnose, check, write `trajectory.csv`,
//! `report.json` and `norms.svg` into the output directory.

use std::fs;
use std::io::Write;
use std::path::Path;

use nordstrom_core::energy::{energy_profile, gronwall_bound};
use nordstrom_core::evolver::{picard_solve, timestep_solve, PicardReport, PicardStatus, TimestepOptions};
use nordstrom_core::linear::solve_linear;
use nordstrom_core::spectral::{homogeneous_norm, sobolev_norm, CubicSource, SourceSpec, SpectralField};
use nordstrom_core::{Trajectory, TrajectoryStatus};
use serde::Serialize;

use crate::certify::CertificateView;
use crate::checks::{run_checks, CheckResult, CheckStatus};
use crate::config::{ExperimentConfig, Solver};
use crate::error::{CliError, Result, EXIT_CHECK_FAILED, EXIT_OK, EXIT_SOLVER};
use crate::svg;

pub const CSV_HEADER: [&str; 7] = [
    "t",
    "sobolev_norm_m1",
    "homogeneous_norm",
    "mean_u",
    "energy",
    "gronwall_bound",
    "min_one_plus_u",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Complete,
    BlowupSuspected,
    NotConverged,
    Diverged,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverSummary {
    pub kind: Solver,
    pub status: SolverStatus,
    pub last_time: f64,
    pub detected_time: Option<f64>,
    pub reason: Option<String>,
    pub picard: Option<PicardReport>,
}

impl SolverSummary {
    pub fn converged(&self) -> bool {
        !matches!(self.status, SolverStatus::NotConverged | SolverStatus::Diverged)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub times: Vec<f64>,
    pub sobolev_norm_m1: Vec<f64>,
    pub mean_u: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub solver: SolverSummary,
    pub summary: TrajectorySummary,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateView>,
    pub warnings: Vec<String>,
    pub exit_code: u8,
}

/// Per-sample diagnostics written to the CSV and used by the checks.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub times: Vec<f64>,
    pub sobolev_norm_m1: Vec<f64>,
    pub homogeneous_norm: Vec<f64>,
    pub mean_u: Vec<f64>,
    pub energy: Vec<f64>,
    pub gronwall: Vec<f64>,
    pub min_one_plus_u: Vec<f64>,
    /// Right-hand side `F` with `u_tt + 2 kappa u_t - Laplace(u) = exp(-kappa t) F`.
    pub forcing: Vec<SpectralField>,
    pub warnings: Vec<String>,
}

pub fn solve(config: &ExperimentConfig) -> Result<(Trajectory, SolverSummary)> {
    let init = config.initial_state()?;
    let source = &config.source;
    let (traj, picard) = match config.solver {
        Solver::Timestep => {
            let opts = TimestepOptions::new(config.dt).record_every(config.record_every);
            (timestep_solve(&init, source, config.t_end, &opts)?, None)
        }
        Solver::Picard => {
            let (traj, report) = picard_solve(&init, source, config.t_end, &config.picard_options())?;
            (traj, Some(report))
        }
        Solver::LinearOnly => {
            let grid = config.grid_spec();
            let spatial = source.spatial_field(grid)?;
            let forcing = move |t: f64| Ok(spatial.scaled(source.envelope(t)));
            let forcing: Option<&dyn Fn(f64) -> nordstrom_core::Result<SpectralField>> =
                if source.is_zero() { None } else { Some(&forcing) };
            (solve_linear(&init, forcing, config.t_end, config.samples())?, None)
        }
    };
    let mut summary = SolverSummary {
        kind: config.solver,
        status: SolverStatus::Complete,
        last_time: traj.last().time,
        detected_time: None,
        reason: None,
        picard: None,
    };
    if let TrajectoryStatus::BlowupSuspected {
        last_time,
        detected_time,
        reason,
    } = &traj.status
    {
        summary.status = SolverStatus::BlowupSuspected;
        summary.last_time = *last_time;
        summary.detected_time = Some(*detected_time);
        summary.reason = Some(reason.clone());
    }
    if let Some(report) = picard {
        match &report.status {
            PicardStatus::Converged => {}
            PicardStatus::NotConverged => {
                summary.status = SolverStatus::NotConverged;
                summary.reason = Some(format!("no convergence in {} iterations", config.picard.max_iter));
            }
            PicardStatus::Diverged { iteration, sup_norm } => {
                summary.status = SolverStatus::Diverged;
                summary.reason = Some(format!(
                    "iterate {iteration} left the ball (sup norm {sup_norm:e}, radius {})",
                    config.picard.radius
                ));
            }
        }
        summary.picard = Some(report);
    }
    Ok((traj, summary))
}

pub fn diagnose(config: &ExperimentConfig, traj: &Trajectory) -> Result<Diagnostics> {
    let grid = config.grid_spec();
    let m = config.m;
    let kappa = config.grid.kappa;
    let linear = config.solver == Solver::LinearOnly;
    // the linear solver sees `a` as forcing, so the profile's cubic term is switched off
    let profile_source = if linear {
        SourceSpec::Constant(0.0)
    } else {
        config.source.clone()
    };
    let p = energy_profile(traj, &profile_source)?;
    let forcing: Vec<SpectralField> = if linear {
        let spatial = config.source.spatial_field(grid)?;
        traj.states
            .iter()
            .map(|s| spatial.scaled(config.source.envelope(s.time)))
            .collect()
    } else {
        let cubic = CubicSource::new(&config.source, grid)?;
        traj.states
            .iter()
            .map(|s| cubic.eval(s.time, &s.u))
            .collect::<nordstrom_core::Result<_>>()?
    };
    let gronwall = if linear {
        let uh: Vec<f64> = traj.states.iter().map(|s| homogeneous_norm(&s.u, m)).collect();
        let src: Vec<f64> = forcing.iter().map(|f| sobolev_norm(f, m)).collect();
        gronwall_bound(p.energy[0], &p.times, &uh, &src, kappa)?
    } else {
        p.gronwall
    };
    Ok(Diagnostics {
        times: p.times,
        sobolev_norm_m1: p.sobolev_norm,
        homogeneous_norm: p.homogeneous_norm,
        mean_u: p.mean,
        energy: p.energy,
        gronwall,
        min_one_plus_u: p.min_one_plus_u,
        forcing,
        warnings: p.warnings,
    })
}

/// Runs the experiment and writes its files; the report's exit code follows
/// the 0 (pass) / 1 (check failed) / 3 (solver did not converge) contract.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    Ok(execute(config)?.0)
}

/// [`run_experiment`], also returning the per-sample diagnostics.
pub fn execute(config: &ExperimentConfig) -> Result<(RunReport, Diagnostics)> {
    let (traj, solver) = solve(config)?;
    let diag = if solver.converged() {
        diagnose(config, &traj)?
    } else {
        // the last iterate may hold non-finite values
        diagnose(config, &traj).unwrap_or_default()
    };
    let (checks, certificate) = if solver.converged() {
        run_checks(config, &traj, &diag)?
    } else {
        let skipped = config
            .checks
            .iter()
            .map(|c| CheckResult::not_applicable(*c, "solver did not converge"))
            .collect();
        (skipped, None)
    };
    let exit_code = if !solver.converged() {
        EXIT_SOLVER
    } else if checks.iter().any(|c| c.status == CheckStatus::Fail) {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    };
    let report = RunReport {
        config: config.clone(),
        summary: TrajectorySummary {
            times: diag.times.clone(),
            sobolev_norm_m1: diag.sobolev_norm_m1.clone(),
            mean_u: diag.mean_u.clone(),
        },
        solver,
        checks,
        certificate,
        warnings: diag.warnings.clone(),
        exit_code,
    };
    write_outputs(config, &report, &diag)?;
    Ok((report, diag))
}

fn write_outputs(config: &ExperimentConfig, report: &RunReport, diag: &Diagnostics) -> Result<()> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.clone(),
        source,
    })?;
    atomic_write(&dir.join("trajectory.csv"), &trajectory_csv(diag)?)?;
    let mut json = serde_json::to_vec_pretty(report).expect("report serializes");
    json.push(b'\n');
    atomic_write(&dir.join("report.json"), &json)?;
    if config.svg {
        let markers = svg::markers(report);
        atomic_write(&dir.join("norms.svg"), svg::norms_plot(diag, &markers).as_bytes())?;
    }
    Ok(())
}

/// Floats with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_csv(diag: &Diagnostics) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for i in 0..diag.times.len() {
        let row = [
            diag.times[i],
            diag.sobolev_norm_m1[i],
            diag.homogeneous_norm[i],
            diag.mean_u[i],
            diag.energy[i],
            diag.gronwall[i],
            diag.min_one_plus_u[i],
        ];
        w.write_record(row.iter().map(|v| fmt_float(*v)))?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}

/// Writes through a temporary sibling and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension("partial");
    let mut file = fs::File::create(&tmp).map_err(err)?;
    file.write_all(bytes).map_err(err)?;
    file.sync_all().map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}
