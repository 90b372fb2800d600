//! One run per parameter value; rows keep the input order whatever the parallelism.

use std::path::Path;

use nordstrom_core::energy::decay_exponent;
use rayon::prelude::*;
use serde_json::Value;

use crate::checks::CheckStatus;
use crate::config::{param_path, set_param, ExperimentConfig};
use crate::error::{CliError, Result, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK};
use crate::run::{atomic_write, execute, fmt_float, SolverStatus};

pub const SWEEP_HEADER: [&str; 13] = [
    "index",
    "param",
    "value",
    "exit_code",
    "solver_status",
    "final_time",
    "final_sobolev_norm_m1",
    "final_mean_u",
    "blowup_suspected",
    "detected_time",
    "decay_rate",
    "checks_failed",
    "message",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub exit_code: u8,
    pub solver_status: Option<SolverStatus>,
    pub final_time: Option<f64>,
    pub final_sobolev_norm_m1: Option<f64>,
    pub final_mean_u: Option<f64>,
    pub blowup_suspected: Option<bool>,
    pub detected_time: Option<f64>,
    /// Fitted decay rate of `sqrt(E)` over `[2/kappa, t_end]`.
    pub decay_rate: Option<f64>,
    pub checks_failed: Vec<String>,
    pub message: String,
}

impl SweepRow {
    fn failed(index: usize, value: f64, err: &CliError) -> Self {
        Self {
            index,
            value,
            exit_code: err.exit_code(),
            solver_status: None,
            final_time: None,
            final_sobolev_norm_m1: None,
            final_mean_u: None,
            blowup_suspected: None,
            detected_time: None,
            decay_rate: None,
            checks_failed: Vec::new(),
            message: err.to_string(),
        }
    }
}

fn run_one(base: &Value, param: &str, index: usize, value: f64, out: &Path) -> SweepRow {
    let attempt = || -> Result<SweepRow> {
        let mut cfg = base.clone();
        set_param(&mut cfg, param, value)?;
        cfg["output_dir"] = Value::from(out.join(format!("run_{index:03}")).to_string_lossy().into_owned());
        let config = ExperimentConfig::from_value(cfg)?;
        let (report, diag) = execute(&config)?;
        let kappa = config.grid.kappa;
        let t_end = diag.times.last().copied().unwrap_or(0.0);
        let decay_rate = (t_end > 2.0 / kappa)
            .then(|| decay_exponent(&diag.times, &diag.energy, 2.0 / kappa, t_end).ok())
            .flatten();
        Ok(SweepRow {
            index,
            value,
            exit_code: report.exit_code,
            solver_status: Some(report.solver.status),
            final_time: Some(report.solver.last_time),
            final_sobolev_norm_m1: diag.sobolev_norm_m1.last().copied(),
            final_mean_u: diag.mean_u.last().copied(),
            blowup_suspected: Some(report.solver.status == SolverStatus::BlowupSuspected),
            detected_time: report.solver.detected_time,
            decay_rate,
            checks_failed: report
                .checks
                .iter()
                .filter(|c| c.status == CheckStatus::Fail)
                .map(|c| c.name.clone())
                .collect(),
            message: report.solver.reason.unwrap_or_default(),
        })
    };
    attempt().unwrap_or_else(|e| SweepRow::failed(index, value, &e))
}

/// Runs the sweep on `parallel` threads and writes `sweep.csv` into the base
/// output directory. Returns the rows and the overall exit code.
pub fn sweep(base: &Value, param: &str, values: &[f64], parallel: usize) -> Result<(Vec<SweepRow>, u8)> {
    let config = ExperimentConfig::from_value(base.clone())?;
    param_path(base, param)?;
    let out = config.output_dir.clone();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.clamp(1, crate::thread_cap()))
        .build()
        .map_err(|e| CliError::config("parallel", e))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| run_one(base, param, i, v, &out))
            .collect()
    });
    std::fs::create_dir_all(&out).map_err(|source| CliError::Write {
        path: out.clone(),
        source,
    })?;
    atomic_write(&out.join("sweep.csv"), &sweep_csv(param, &rows)?)?;
    let code = if rows.iter().all(|r| r.exit_code == EXIT_OK) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    Ok((rows, code))
}

pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> Result<Vec<u8>> {
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let status = r
            .solver_status
            .map(|s| {
                serde_json::to_value(s)
                    .expect("status serializes")
                    .as_str()
                    .unwrap_or("")
                    .to_string()
            })
            .unwrap_or_else(|| {
                if r.exit_code == EXIT_CONFIG {
                    "config_error".into()
                } else {
                    "error".into()
                }
            });
        w.write_record([
            r.index.to_string(),
            param.to_string(),
            fmt_float(r.value),
            r.exit_code.to_string(),
            status,
            opt(r.final_time),
            opt(r.final_sobolev_norm_m1),
            opt(r.final_mean_u),
            r.blowup_suspected.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.detected_time),
            opt(r.decay_rate),
            r.checks_failed.join(";"),
            r.message.clone(),
        ])?;
    }
    Ok(w.into_inner().expect("in-memory writer"))
}
