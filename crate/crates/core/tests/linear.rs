mod common;

use common::oracle::{random_field, rkf45, rng};
use nordstrom_core::linear::{
    linear_energy_bound, solve_linear, solve_linear_sampled, solve_mode_nonzero_with_derivative,
    solve_mode_zero_with_derivative, ForcingProfile, Unforced,
};
use nordstrom_core::spectral::{sobolev_norm, GridSpec, SpectralField, WaveState, Wavevector};
use nordstrom_core::Result;
use num_complex::Complex64;
use rand::Rng;

fn forcing_profile(tau: f64) -> Complex64 {
    Complex64::new(0.7 * (1.3 * tau).cos() + 0.2, 0.3 * (0.4 * tau).sin())
}

/// Reference `(u, u_t)` of one mode from the adaptive oracle.
fn oracle_mode(k2: f64, kappa: f64, f: Complex64, g: Complex64, times: &[f64]) -> Vec<(Complex64, Complex64)> {
    let rhs = |t: f64, y: &[f64]| {
        let src = forcing_profile(t) * (-kappa * t).exp();
        vec![
            y[1],
            src.re - 2.0 * kappa * y[1] - k2 * y[0],
            y[3],
            src.im - 2.0 * kappa * y[3] - k2 * y[2],
        ]
    };
    rkf45(rhs, 0.0, &[f.re, g.re, f.im, g.im], times, 1e-13)
        .into_iter()
        .map(|y| (Complex64::new(y[0], y[2]), Complex64::new(y[1], y[3])))
        .collect()
}

#[test]
fn mode_solutions_match_adaptive_oracle() {
    let times: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
    let f = Complex64::new(0.4, -0.2);
    let g = Complex64::new(0.1, 0.3);
    for kappa in [0.1, 0.5, 0.9] {
        for k in [[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 4, 0]] {
            let k = Wavevector(k);
            let k2 = k.norm2() as f64;
            let (f, g) = if k2 == 0.0 {
                (Complex64::new(f.re, 0.0), Complex64::new(g.re, 0.0))
            } else {
                (f, g)
            };
            let reference = if k2 == 0.0 {
                let rhs =
                    |t: f64, y: &[f64]| vec![y[1], forcing_profile(t).re * (-kappa * t).exp() - 2.0 * kappa * y[1]];
                rkf45(rhs, 0.0, &[f.re, g.re], &times, 1e-13)
                    .into_iter()
                    .map(|y| (Complex64::new(y[0], 0.0), Complex64::new(y[1], 0.0)))
                    .collect()
            } else {
                oracle_mode(k2, kappa, f, g, &times)
            };
            let scale = reference.iter().map(|(u, _)| u.norm()).fold(0.0, f64::max);
            let scale_t = reference.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
            for (&t, &(u_ref, ut_ref)) in times.iter().zip(&reference) {
                let (u, ut) = if k2 == 0.0 {
                    let (a, b) = solve_mode_zero_with_derivative(kappa, f.re, g.re, &forcing_profile, t).unwrap();
                    (Complex64::new(a, 0.0), Complex64::new(b, 0.0))
                } else {
                    solve_mode_nonzero_with_derivative(k, kappa, f, g, &forcing_profile, t).unwrap()
                };
                assert!((u - u_ref).norm() / scale < 1e-8, "k={k:?} kappa={kappa} t={t}");
                assert!((ut - ut_ref).norm() / scale_t < 1e-8, "k={k:?} kappa={kappa} t={t}");
            }
        }
    }
}

#[test]
fn unit_forcing_reference_value() {
    // frozen from the closed form exp(-kappa) (1 - cos w) / w^2 with w = sqrt(1 - kappa^2)
    let (u, ut) = solve_mode_nonzero_with_derivative(
        Wavevector([1, 0, 0]),
        0.5,
        Complex64::default(),
        Complex64::default(),
        &|_t: f64| Complex64::new(1.0, 0.0),
        1.0,
    )
    .unwrap();
    assert!((u.re - 0.284_778_805_171_037_7).abs() < 1e-13);
    assert!((ut.re - 0.391_117_792_529_174_1).abs() < 1e-13);
    assert!(u.im.abs() < 1e-16);
}

fn forcing_field(grid: GridSpec, shape: &SpectralField) -> impl Fn(f64) -> Result<SpectralField> + '_ {
    move |t: f64| {
        let _ = grid;
        let mut f = shape.scaled((0.8 * t).cos());
        f.coeffs[0] += Complex64::new(0.1 * t.sin(), 0.0);
        Ok(f)
    }
}

#[test]
fn field_solver_agrees_with_mode_solvers() {
    let grid = GridSpec::new(8, 1.0, 0.4).unwrap();
    let mut r = rng(7);
    let u0 = random_field(grid, 3, 2.0, &mut r);
    let u1 = random_field(grid, 3, 2.0, &mut r);
    let shape = random_field(grid, 2, 1.0, &mut r);
    let forcing = forcing_field(grid, &shape);
    let init = WaveState::new(0.0, u0.clone(), u1.clone()).unwrap();
    let traj = solve_linear(&init, Some(&forcing), 3.0, 7).unwrap();
    assert_eq!(traj.len(), 7);
    let last = traj.last();
    for idx in [0usize, 1, 9, 73, 200, 511] {
        let k = grid.wavevector(idx);
        if k.max_abs() >= 4 {
            continue;
        }
        let fk = |t: f64| forcing(t).unwrap().coeffs[idx];
        let (u, ut) = if idx == 0 {
            let (a, b) = solve_mode_zero_with_derivative(0.4, u0.coeffs[0].re, u1.coeffs[0].re, &fk, 3.0).unwrap();
            (Complex64::new(a, 0.0), Complex64::new(b, 0.0))
        } else {
            solve_mode_nonzero_with_derivative(k, 0.4, u0.coeffs[idx], u1.coeffs[idx], &fk, 3.0).unwrap()
        };
        assert!((last.u.coeffs[idx] - u).norm() < 1e-12, "idx {idx}");
        assert!((last.u_t.coeffs[idx] - ut).norm() < 1e-12, "idx {idx}");
    }
}

#[test]
fn sampled_forcing_converges_to_exact_forcing() {
    let grid = GridSpec::new(8, 1.0, 0.5).unwrap();
    let mut r = rng(11);
    let init = WaveState::new(
        0.0,
        random_field(grid, 2, 2.0, &mut r),
        random_field(grid, 2, 2.0, &mut r),
    )
    .unwrap();
    let shape = random_field(grid, 2, 1.0, &mut r);
    let forcing = forcing_field(grid, &shape);
    let exact = solve_linear(&init, Some(&forcing), 4.0, 2).unwrap();
    let mut errors = Vec::new();
    for samples in [21usize, 41, 81] {
        let times: Vec<f64> = (0..samples).map(|j| 4.0 * j as f64 / (samples - 1) as f64).collect();
        let fs: Vec<SpectralField> = times.iter().map(|&t| forcing(t).unwrap()).collect();
        let states = solve_linear_sampled(&init, &times, &fs).unwrap();
        let diff = states.last().unwrap().u.sub(&exact.last().u).unwrap();
        errors.push(sobolev_norm(&diff, 1.0));
    }
    assert!(errors[2] < 1e-7, "{errors:?}");
    assert!(
        errors[0] / errors[1] > 10.0 && errors[1] / errors[2] > 10.0,
        "{errors:?}"
    );
}

#[test]
fn free_solution_is_exact_for_zero_forcing() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let f = SpectralField::from_fn(grid, |x| x[0].cos() + 0.3);
    let init = WaveState::new(0.0, f, SpectralField::constant(grid, 0.2)).unwrap();
    let traj = solve_linear(&init, None, 5.0, 11).unwrap();
    let kappa: f64 = 0.5;
    let w = (1.0 - kappa * kappa).sqrt();
    for s in &traj.states {
        let t = s.time;
        let c = (-kappa * t).exp() * ((w * t).cos() + kappa / w * (w * t).sin());
        assert!((s.u.coeff(Wavevector([1, 0, 0])).unwrap().re - 0.5 * c).abs() < 1e-15);
        let mean = 0.3 + 0.2 * (1.0 - (-2.0 * kappa * t).exp()) / (2.0 * kappa);
        assert!((s.u.mean() - mean).abs() < 1e-15);
    }
    let one = solve_mode_zero_with_derivative(kappa, 0.3, 0.2, &Unforced, 5.0).unwrap();
    assert!((traj.last().u.mean() - one.0).abs() < 1e-15);
}

#[test]
fn energy_bound_dominates_random_solutions() {
    let grid = GridSpec::new(8, 1.0, 0.5).unwrap();
    let mut r = rng(2024);
    for trial in 0..100 {
        let kappa = r.gen_range(0.05..0.95);
        let m = [0.0, 1.0, 2.0][trial % 3];
        let grid = GridSpec::new(8, m, kappa).unwrap_or(grid);
        let scale = r.gen_range(0.01..1.0);
        let init = WaveState::new(
            0.0,
            random_field(grid, 3, 2.0, &mut r).scaled(scale),
            random_field(grid, 3, 1.5, &mut r).scaled(scale),
        )
        .unwrap();
        let shape = random_field(grid, 2, 1.0, &mut r).scaled(r.gen_range(0.0..1.0));
        let freq = r.gen_range(0.1..3.0);
        let forcing = move |t: f64| -> Result<SpectralField> { Ok(shape.scaled((freq * t).cos())) };
        let t_end = 8.0;
        let traj = solve_linear(&init, Some(&forcing), t_end, 17).unwrap();
        let profile = ForcingProfile::sample(&forcing, m, t_end, 801).unwrap();
        for s in &traj.states {
            let norm_sq = sobolev_norm(&s.u, m + 1.0).powi(2);
            let bound = linear_energy_bound(&init, &profile, s.time, m, kappa).unwrap();
            assert!(
                norm_sq <= bound * (1.0 + 1e-6),
                "trial {trial} t={} {norm_sq} > {bound}",
                s.time
            );
        }
    }
}

#[test]
fn mean_group_needs_cross_term_factor() {
    // with f_0 = g_0 > 0 the sum of squares alone underestimates |u_0|^2
    let kappa: f64 = 0.5;
    let t = 20.0;
    let (u0, _) = solve_mode_zero_with_derivative(kappa, 0.1, 0.1, &Unforced, t).unwrap();
    let x = (1.0 - (-2.0 * kappa * t).exp()) / (2.0 * kappa);
    let squares = 0.01 + 0.01 * x * x;
    assert!(u0 * u0 > 1.9 * squares);
    let grid = GridSpec::new(4, 1.0, kappa).unwrap();
    let init = WaveState::new(
        0.0,
        SpectralField::constant(grid, 0.1),
        SpectralField::constant(grid, 0.1),
    )
    .unwrap();
    let bound = linear_energy_bound(&init, &ForcingProfile::zero(), t, 1.0, kappa).unwrap();
    assert!(u0 * u0 <= bound);
}

#[test]
fn kappa_outside_unit_interval_is_rejected() {
    let r = solve_mode_nonzero_with_derivative(
        Wavevector([1, 0, 0]),
        1.0,
        Complex64::default(),
        Complex64::default(),
        &Unforced,
        1.0,
    );
    assert!(r.is_err());
}
