//! Experiment configuration, read from JSON.
//!
//! ```json
//! {
//!   "grid": {"n_per_dim": 16, "kappa": 0.5},
//!   "m": 2.0,
//!   "initial_data": {"f": {"constant": 0.0}, "g": {"modes": [{"k": [0, 0, 0], "re": 1.0}]}},
//!   "source": {"constant": 8.0},
//!   "t_end": 3.0,
//!   "dt": 0.001,
//!   "solver": "timestep",
//!   "checks": ["blowup", "positivity"],
//!   "output_dir": "out/blowup"
//! }
//! ```
//!
//! `dt` is the step of the timestepper and the sample spacing of the other
//! solvers. Optional keys: `record_every` (timestepper output stride, default
//! 1), `picard` (`radius`, `tol`, `max_iter`), `svg` (default true).

use std::fs;
use std::path::{Path, PathBuf};

use nordstrom_core::evolver::PicardOptions;
use nordstrom_core::spectral::{GridSpec, Mode, SourceSpec, SpectralField, WaveState};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Largest number of stored samples a config may ask for.
pub const MAX_SAMPLES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_per_dim: usize,
    pub kappa: f64,
}

/// A real trigonometric polynomial, or a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant(f64),
    Modes(Vec<Mode>),
}

impl FieldSpec {
    pub fn build(&self, grid: GridSpec) -> nordstrom_core::Result<SpectralField> {
        match self {
            FieldSpec::Constant(c) => Ok(SpectralField::constant(grid, *c)),
            FieldSpec::Modes(modes) => SpectralField::from_modes(grid, modes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub f: FieldSpec,
    pub g: FieldSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Picard,
    Timestep,
    /// Drops the nonlinearity: `a(t, x)` acts as a plain forcing.
    #[serde(alias = "linear-only")]
    LinearOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Energy,
    Gronwall,
    Decay,
    Blowup,
    Positivity,
    Jensen,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Energy => "energy",
            Check::Gronwall => "gronwall",
            Check::Decay => "decay",
            Check::Blowup => "blowup",
            Check::Positivity => "positivity",
            Check::Jensen => "jensen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub radius: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        let d = PicardOptions::default();
        Self {
            radius: d.radius,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

fn default_m() -> f64 {
    2.0
}

fn zero_source() -> SourceSpec {
    SourceSpec::Constant(0.0)
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default = "default_m")]
    pub m: f64,
    pub initial_data: InitialData,
    #[serde(default = "zero_source")]
    pub source: SourceSpec,
    pub t_end: f64,
    pub dt: f64,
    pub solver: Solver,
    #[serde(default)]
    pub checks: Vec<Check>,
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub record_every: usize,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default = "yes")]
    pub svg: bool,
}

/// Raw JSON of a config file, before validation.
pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::config("<root>", e))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_value(read_json(path)?)
    }

    /// Deserializes and validates; errors carry the dotted field path.
    pub fn from_value(value: Value) -> Result<Self> {
        let mut config: Self = serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "<root>".into() } else { path }, e.into_inner())
        })?;
        config.validate()?;
        let mut seen = Vec::new();
        config.checks.retain(|c| {
            let fresh = !seen.contains(c);
            seen.push(*c);
            fresh
        });
        Ok(config)
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            n_per_dim: self.grid.n_per_dim,
            sobolev_order_m: self.m,
            kappa: self.grid.kappa,
        }
    }

    pub fn initial_state(&self) -> nordstrom_core::Result<WaveState> {
        let grid = self.grid_spec();
        WaveState::new(0.0, self.initial_data.f.build(grid)?, self.initial_data.g.build(grid)?)
    }

    /// Uniform sample count for the Picard and linear solvers.
    pub fn samples(&self) -> usize {
        (self.t_end / self.dt).round() as usize + 1
    }

    pub fn picard_options(&self) -> PicardOptions {
        PicardOptions {
            radius: self.picard.radius,
            tol: self.picard.tol,
            max_iter: self.picard.max_iter,
            samples: self.samples(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.grid.n_per_dim;
        if n < 4 || !n.is_multiple_of(2) {
            return Err(CliError::config(
                "grid.n_per_dim",
                format!("must be even and at least 4, got {n}"),
            ));
        }
        if !(self.grid.kappa > 0.0 && self.grid.kappa < 1.0) {
            return Err(CliError::config(
                "grid.kappa",
                format!("must lie in (0, 1), got {}", self.grid.kappa),
            ));
        }
        if !(self.m.is_finite() && self.m >= 0.0) {
            return Err(CliError::config(
                "m",
                format!("must be finite and non-negative, got {}", self.m),
            ));
        }
        let grid = self.grid_spec();
        for (name, spec) in [("f", &self.initial_data.f), ("g", &self.initial_data.g)] {
            let path = format!("initial_data.{name}");
            if let FieldSpec::Constant(c) = spec {
                if !c.is_finite() {
                    return Err(CliError::config(path, "constant must be finite"));
                }
            }
            spec.build(grid).map_err(|e| CliError::config(path.clone(), e))?;
            if let FieldSpec::Modes(modes) = spec {
                if modes.iter().any(|m| !(m.re.is_finite() && m.im.is_finite())) {
                    return Err(CliError::config(path, "coefficients must be finite"));
                }
            }
        }
        self.source.validate(grid).map_err(|e| CliError::config("source", e))?;
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(CliError::config(
                "t_end",
                format!("must be positive, got {}", self.t_end),
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.t_end) {
            return Err(CliError::config(
                "dt",
                format!("must lie in (0, t_end], got {}", self.dt),
            ));
        }
        let stored = match self.solver {
            Solver::Timestep => self.samples() / self.record_every.max(1),
            _ => self.samples(),
        };
        if stored > MAX_SAMPLES {
            return Err(CliError::config(
                "dt",
                format!("{stored} samples exceed the limit {MAX_SAMPLES}"),
            ));
        }
        if self.record_every == 0 {
            return Err(CliError::config("record_every", "must be at least 1"));
        }
        let p = &self.picard;
        if !(p.radius > 0.0 && p.tol > 0.0 && p.max_iter > 0) {
            return Err(CliError::config("picard", "radius, tol and max_iter must be positive"));
        }
        if self.solver == Solver::Picard && self.samples() < 4 {
            return Err(CliError::config("dt", "Picard iteration needs at least four samples"));
        }
        for check in &self.checks {
            let clash = match (check, self.solver) {
                (Check::Blowup, Solver::Picard | Solver::LinearOnly) => Some("blowup needs the timestep solver"),
                (Check::Positivity, Solver::LinearOnly) if !self.source.is_zero() => {
                    Some("positivity concerns the nonlinear problem; use picard or timestep")
                }
                _ => None,
            };
            if let Some(msg) = clash {
                return Err(CliError::config("checks", msg));
            }
        }
        Ok(())
    }
}

/// Dotted path of the numeric field `name` (a dotted path, or one of `a0`, `kappa`, `n`, `m`).
pub fn param_path(config: &Value, name: &str) -> Result<String> {
    let path = match name {
        "a0" => "source.constant",
        "kappa" => "grid.kappa",
        "n" => "grid.n_per_dim",
        other => other,
    };
    match config.pointer(&pointer(path)) {
        Some(Value::Number(_)) => Ok(path.to_string()),
        Some(_) => Err(CliError::config(path, "not a numeric field")),
        None => Err(CliError::config(path, "no such field in the base config")),
    }
}

fn pointer(path: &str) -> String {
    format!("/{}", path.replace('.', "/"))
}

pub fn set_param(config: &mut Value, name: &str, value: f64) -> Result<()> {
    let path = param_path(config, name)?;
    let integer = ["n_per_dim", "record_every", "max_iter"]
        .iter()
        .any(|f| path.ends_with(f));
    let new = if integer {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(CliError::config(path, format!("integer field cannot take {value}")));
        }
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| CliError::config(path.clone(), format!("{value} is not a finite number")))?
    };
    *config.pointer_mut(&pointer(&path)).expect("path resolved") = new;
    Ok(())
}
