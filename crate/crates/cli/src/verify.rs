//! Built-in invariant suite behind `nordstrom verify`. Every item uses a
//! reference that does not go through the code path it checks: the mode
//! formulas against adaptive integration, spectral norms against grid sums,
//! solvers against the reduced ODE.

use std::f64::consts::PI;
use std::fs;

use nordstrom_core::blowup::{certificate, detect_pde_blowup, integrate_f_ode, jensen_gap};
use nordstrom_core::energy::{decay_diagnostics, decay_exponent, energy_profile};
use nordstrom_core::evolver::{
    compute_thresholds, pde_residual, picard_solve, timestep_solve, PicardOptions, TimestepOptions,
};
use nordstrom_core::linear::{
    linear_energy_bound, solve_linear, solve_mode_nonzero, solve_mode_zero, undamped_free_wave, ForcingProfile,
    Unforced,
};
use nordstrom_core::ode::{Dopri, OdeOptions};
use nordstrom_core::positivity::{kirchhoff_free, kirchhoff_iterate, Kirchhoff};
use nordstrom_core::spectral::{
    gradient, homogeneous_norm, sobolev_norm, GridSpec, SourceSpec, SpectralField, WaveState, Wavevector,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::run::run_experiment;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

type Check = fn() -> Result<String, String>;

const SUITE: [(&str, Check); 10] = [
    ("linear modes vs adaptive integration", linear_modes),
    ("spectral identities", spectral_identities),
    ("energy and Gronwall bounds", energy_bounds),
    ("small-data fixed point and decay", fixed_point),
    ("constant data vs scalar ODE", homogeneous),
    ("blow-up certificate", certificate_soundness),
    ("Jensen inequality", jensen),
    ("Kirchhoff evaluator and monotone iteration", positivity),
    ("decay rate of free waves", decay_rate),
    ("deterministic output", determinism),
];

pub fn run_suite() -> Vec<Outcome> {
    SUITE
        .iter()
        .map(|(name, check)| {
            let (pass, detail) = match check() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            Outcome { name, pass, detail }
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: nordstrom_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn random_field(grid: GridSpec, band: i64, rng: &mut ChaCha8Rng) -> SpectralField {
    let values: Vec<f64> = {
        let modes: Vec<([i64; 3], f64, f64)> = (0..12)
            .map(|_| {
                let k = [
                    rng.gen_range(-band..=band),
                    rng.gen_range(-band..=band),
                    rng.gen_range(-band..=band),
                ];
                (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))
            })
            .collect();
        (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                modes
                    .iter()
                    .map(|(k, a, p)| a * (k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2] + p).cos())
                    .sum()
            })
            .collect()
    };
    nordstrom_core::spectral::forward_transform(grid, &values).expect("grid-sized sample")
}

fn linear_modes() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for kappa in [0.1, 0.5, 0.9] {
        for k in [0i64, 1, 2, 5] {
            let k2 = (k * k) as f64;
            let (f, g) = (Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.4));
            let rhs = move |_t: f64, y: &[f64; 4]| {
                [
                    y[2],
                    y[3],
                    -2.0 * kappa * y[2] - k2 * y[0],
                    -2.0 * kappa * y[3] - k2 * y[1],
                ]
            };
            let opts = OdeOptions {
                rtol: 1e-13,
                atol: 1e-15,
                ..OdeOptions::default()
            };
            let mut ode = Dopri::new(rhs, 0.0, [f.re, f.im, g.re, g.im], opts);
            for step in 1..=20 {
                let t = 0.5 * step as f64;
                ode.advance_to(t, |_, _| false);
                let reference = Complex64::new(ode.y[0], ode.y[1]);
                let got = if k == 0 {
                    Complex64::new(core(solve_mode_zero(kappa, f.re, g.re, &Unforced, t))?, 0.0)
                } else {
                    core(solve_mode_nonzero(Wavevector([k, 0, 0]), kappa, f, g, &Unforced, t))?
                };
                let want = if k == 0 {
                    Complex64::new(reference.re, 0.0)
                } else {
                    reference
                };
                worst = worst.max((got - want).norm() / want.norm().max(1e-300));
            }
        }
    }
    ensure(worst <= 1e-8, || format!("relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.3e}"))
}

fn spectral_identities() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let grid = core(GridSpec::new(8, 1.0 + 0.5 * (trial % 4) as f64, 0.5))?;
        let m = grid.sobolev_order_m;
        let u = random_field(grid, 3, &mut rng);
        let values = core(u.values())?;
        let l2_grid = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
        let l2_spec: f64 = u.coeffs.iter().map(|c| c.norm_sqr()).sum();
        worst = worst.max((l2_grid - l2_spec).abs() / l2_spec);
        let split = u.mean().powi(2) + homogeneous_norm(&u, m).powi(2);
        worst = worst.max((sobolev_norm(&u, m).powi(2) - split).abs() / split);
        let grad: f64 = gradient(&u).iter().map(|d| homogeneous_norm(d, m).powi(2)).sum();
        let target = homogeneous_norm(&u, m + 1.0).powi(2);
        worst = worst.max((grad - target).abs() / target);
    }
    ensure(worst <= 1e-12, || format!("relative defect {worst:e}"))?;
    Ok(format!("100 fields, max relative defect {worst:.3e}"))
}

fn energy_bounds() -> Result<String, String> {
    let kappa = 0.5;
    let grid = core(GridSpec::new(8, 2.0, kappa))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_field(grid, 2, &mut rng).scaled(0.002);
    let g = random_field(grid, 2, &mut rng).scaled(0.002);
    let init = core(WaveState::new(0.0, f, g))?;
    let source = SourceSpec::Constant(0.01);
    let opts = PicardOptions {
        radius: 1.0,
        tol: 1e-12,
        max_iter: 60,
        samples: 201,
    };
    let (traj, report) = core(picard_solve(&init, &source, 10.0, &opts))?;
    ensure(report.converged, || "Picard did not converge".into())?;
    let p = core(energy_profile(&traj, &source))?;
    let gron = p.energy.iter().zip(&p.gronwall).map(|(e, g)| e / g).fold(0.0, f64::max);
    let cubic = core(nordstrom_core::spectral::CubicSource::new(&source, grid))?;
    let forcing: Vec<SpectralField> = core(traj.states.iter().map(|s| cubic.eval(s.time, &s.u)).collect())?;
    let profile = ForcingProfile {
        times: p.times.clone(),
        homogeneous_sq: forcing.iter().map(|f| homogeneous_norm(f, 2.0).powi(2)).collect(),
        mean_abs: forcing.iter().map(|f| f.mean().abs()).collect(),
    };
    let mut lin: f64 = 0.0;
    for s in &traj.states {
        let bound = core(linear_energy_bound(&init, &profile, s.time, 2.0, kappa))?;
        lin = lin.max(sobolev_norm(&s.u, 3.0).powi(2) / bound);
    }
    ensure(gron <= 1.0 + 1e-6 && lin <= 1.0 + 1e-6, || {
        format!("E/G {gron:e}, linear {lin:e}")
    })?;
    Ok(format!("max E/G {gron:.3e}, max ||u||^2/bound {lin:.3e}"))
}

fn fixed_point() -> Result<String, String> {
    let kappa = 0.5;
    let grid = core(GridSpec::new(8, 2.0, kappa))?;
    let radius = 0.1;
    let th = core(compute_thresholds(grid, radius, 20))?;
    let a0 = 0.5 * th.epsilon;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let f = random_field(grid, 2, &mut rng);
    let g = random_field(grid, 2, &mut rng);
    let f = f.scaled(0.01f64.min(0.5 * th.bounds[0]) / sobolev_norm(&f, 3.0));
    let g = g.scaled(0.01f64.min(0.5 * th.bounds[1]) / sobolev_norm(&g, 2.0));
    let init = core(WaveState::new(0.0, f, g))?;
    let source = SourceSpec::Constant(a0);
    let tol = 1e-6;
    let opts = PicardOptions {
        radius,
        tol,
        max_iter: 60,
        samples: 801,
    };
    let (traj, report) = core(picard_solve(&init, &source, 20.0 / kappa, &opts))?;
    ensure(report.converged, || format!("status {:?}", report.status))?;
    let worst_factor = report.contraction_factors.iter().copied().fold(0.0, f64::max);
    ensure(worst_factor < 1.0, || format!("contraction factor {worst_factor}"))?;
    let residual = core(pde_residual(&traj, &source))?.max;
    ensure(residual <= 10.0 * tol, || format!("residual {residual:e}"))?;
    let tail = homogeneous_norm(&traj.last().u, 3.0);
    ensure(tail < 1e-3, || format!("||u_h(20/kappa)|| = {tail:e}"))?;
    Ok(format!(
        "a0 = {a0:.3e}, {} iterates, max factor {worst_factor:.3e}, residual {residual:.3e}, ||u_h(end)|| {tail:.3e}",
        report.iterates
    ))
}

fn homogeneous() -> Result<String, String> {
    let kappa = 0.5;
    let grid = core(GridSpec::new(4, 2.0, kappa))?;
    let init = core(WaveState::new(
        0.0,
        SpectralField::zeros(grid),
        SpectralField::constant(grid, 1.0),
    ))?;
    let source = SourceSpec::Constant(8.0);
    let traj = core(timestep_solve(
        &init,
        &source,
        5.0,
        &TimestepOptions::new(1e-4).record_every(100),
    ))?;
    let t_pde = detect_pde_blowup(&traj).time.ok_or("no blow-up detected")?;
    let run = core(integrate_f_ode(8.0, 0.0, 1.0, kappa, 1e6, 5.0))?;
    let t_ode = run.blowup.ok_or("reduced ODE did not blow up")?.estimate();
    let rel = (t_pde - t_ode).abs() / t_ode;
    ensure(rel < 0.02, || format!("blow-up {t_pde} vs {t_ode}"))?;
    let flat = traj
        .states
        .iter()
        .map(|s| homogeneous_norm(&s.u, 3.0))
        .fold(0.0, f64::max);
    ensure(flat < 1e-12, || format!("constant data developed structure {flat:e}"))?;
    Ok(format!("blow-up at {t_pde:.4} vs reduced {t_ode:.4}"))
}

fn certificate_soundness() -> Result<String, String> {
    let c = core(certificate(8.0, 0.0, 1.0, 0.5))?;
    let t0 = c.t0.ok_or("no bound")?;
    ensure(
        c.certifies_blowup && (c.tau0 - 1.8935).abs() < 5e-4 && (t0 - 2.2393).abs() < 5e-4,
        || format!("tau0 {} t0 {t0}", c.tau0),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut count = 0;
    while count < 5 {
        let (a0, f0, g0, kappa) = (
            rng.gen_range(2.0..20.0),
            rng.gen_range(0.0..0.5),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.2..0.8),
        );
        let Ok(c) = certificate(a0, f0, g0, kappa) else {
            continue;
        };
        let Some(t0) = c.t0.filter(|_| c.certifies_blowup) else {
            continue;
        };
        let run = core(integrate_f_ode(a0, f0, g0, kappa, 1e6, t0 + 1.0))?;
        let lower = run
            .blowup
            .map(|b| b.lower)
            .ok_or_else(|| format!("no blow-up for {a0} {f0} {g0} {kappa}"))?;
        ensure(lower <= t0, || format!("blow-up {lower} after bound {t0}"))?;
        count += 1;
    }
    Ok(format!("reference tau0 {:.6}, t0 {t0:.6}; 5 random sets sound", c.tau0))
}

fn jensen() -> Result<String, String> {
    let grid = core(GridSpec::new(8, 2.0, 0.5))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let source = SourceSpec::Constant(2.0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let u = random_field(grid, 2, &mut rng);
        let (lo, _) = core(u.grid_extrema())?;
        let u = u.scaled(rng.gen_range(0.1..1.0) / lo.abs().max(1e-12));
        let Ok((lhs, rhs)) = jensen_gap(&u, &source, 0.0, 2.0) else {
            continue;
        };
        worst = worst.max((rhs - lhs) / rhs.abs().max(1.0));
    }
    ensure(worst <= 1e-12, || format!("shortfall {worst:e}"))?;
    Ok(format!("max relative shortfall {worst:.3e}"))
}

fn positivity() -> Result<String, String> {
    let kappa = 0.5;
    let grid = core(GridSpec::new(8, 2.0, kappa))?;
    let f = SpectralField::from_fn(grid, |x| 0.1 * x[0].cos() + 0.05 * (x[1] + 2.0 * x[2]).sin());
    let h = SpectralField::from_fn(grid, |x| 1.0 + 0.2 * (x[0] - x[1]).cos());
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.5] {
        let exact = core(undamped_free_wave(&f, &h, t))?;
        for x in [[0.3, 1.1, 5.0], [2.0, 4.0, 0.7]] {
            let want = exact.eval_at(x);
            worst = worst.max((core(kirchhoff_free(&f, &h, t, x))? - want).abs() / want.abs());
        }
    }
    ensure(worst <= 1e-6, || format!("Kirchhoff error {worst:e}"))?;
    let f = SpectralField::constant(grid, 0.1);
    let g = SpectralField::from_fn(grid, |x| 0.05 * (1.0 + x[0].cos()));
    let report = core(kirchhoff_iterate(
        &f,
        &g,
        &SourceSpec::Constant(0.5),
        1.0,
        81,
        5,
        &Kirchhoff::default(),
    ))?;
    ensure(report.max_decrease <= 1e-10 && report.min_free_wave > 0.0, || {
        format!(
            "decrease {:e}, min free wave {}",
            report.max_decrease, report.min_free_wave
        )
    })?;
    Ok(format!(
        "Kirchhoff error {worst:.3e}, max decrease {:.3e}",
        report.max_decrease
    ))
}

fn decay_rate() -> Result<String, String> {
    let kappa = 0.5;
    let grid = core(GridSpec::new(8, 2.0, kappa))?;
    let init = core(WaveState::new(
        0.0,
        SpectralField::from_fn(grid, |x| 0.1 * (x[0] + x[1]).cos()),
        SpectralField::from_fn(grid, |x| 0.1 * x[2].sin()),
    ))?;
    let traj = core(solve_linear(&init, None, 10.0 / kappa, 2001))?;
    let source = SourceSpec::Constant(0.0);
    let report = core(decay_diagnostics(&traj, &source))?;
    let rate = core(decay_exponent(
        &report.profile.times,
        &report.profile.energy,
        2.0 / kappa,
        10.0 / kappa,
    ))?;
    ensure((rate - kappa).abs() <= 0.05 * kappa, || format!("rate {rate}"))?;
    Ok(format!("fitted rate {rate:.5} for kappa {kappa}"))
}

fn determinism() -> Result<String, String> {
    let root = std::env::temp_dir().join(format!("nordstrom-verify-{}", std::process::id()));
    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = root.join(format!("run{run}"));
        let config = json!({
            "grid": {"n_per_dim": 8, "kappa": 0.5},
            "initial_data": {
                "f": {"modes": [{"k": [1, 0, 0], "re": 0.05}, {"k": [-1, 0, 0], "re": 0.05}]},
                "g": {"constant": 0.3}
            },
            "source": {"constant": 2.0},
            "t_end": 1.0,
            "dt": 0.01,
            "solver": "timestep",
            "checks": ["energy", "gronwall", "positivity", "jensen", "blowup"],
            "output_dir": dir.to_string_lossy()
        });
        let config = ExperimentConfig::from_value(config).map_err(|e| e.to_string())?;
        let mut report = run_experiment(&config).map_err(|e| e.to_string())?;
        report.config.output_dir = Default::default();
        let csv = fs::read(dir.join("trajectory.csv")).map_err(|e| e.to_string())?;
        let svg = fs::read(dir.join("norms.svg")).map_err(|e| e.to_string())?;
        outputs.push((csv, serde_json::to_vec(&report).expect("serializes"), svg));
    }
    let _ = fs::remove_dir_all(&root);
    ensure(outputs[0] == outputs[1], || "outputs differ between runs".into())?;
    Ok("CSV, JSON and SVG identical across two runs".into())
}
