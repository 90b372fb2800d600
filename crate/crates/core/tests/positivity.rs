mod common;

use common::oracle::{random_field, rkf45, rng};
use nordstrom_core::evolver::{picard_solve, timestep_solve, PicardOptions, TimestepOptions};
use nordstrom_core::linear::{solve_linear, undamped_free_wave};
use nordstrom_core::positivity::{
    check_positivity_hypotheses, iteration_source, kirchhoff_free, kirchhoff_iterate, min_one_plus_u, Kirchhoff,
};
use nordstrom_core::spectral::{Envelope, GridSpec, Mode, SourceSpec, SpectralField, WaveState};
use rand::Rng;

fn probe_points() -> Vec<[f64; 3]> {
    vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [5.5, 0.3, 4.1], [3.1, 6.0, 1.7]]
}

fn positive_source() -> SourceSpec {
    let mut modes = vec![Mode::new([0, 0, 0], 1.0, 0.0)];
    modes.extend(Mode::cosine([1, 0, 0], 0.3));
    SourceSpec::Separable {
        envelope: Envelope::Constant(1.0),
        modes,
    }
}

/// `g >= 0`, non-constant.
fn bump(grid: GridSpec, amp: f64) -> SpectralField {
    SpectralField::from_fn(grid, |x| amp * (1.0 + x[0].cos()) * (1.0 + 0.5 * x[1].sin()))
}

#[test]
fn free_wave_of_constants() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let zero = SpectralField::zeros(grid);
    for t in [0.0, 0.7, 3.0] {
        for x in probe_points() {
            let v = kirchhoff_free(&zero, &SpectralField::constant(grid, 0.4), t, x).unwrap();
            assert!((v - (1.0 + 0.4 * t)).abs() < 1e-13);
            let v = kirchhoff_free(&SpectralField::constant(grid, 0.3), &zero, t, x).unwrap();
            assert!((v - 1.3).abs() < 1e-13);
        }
    }
    assert!(kirchhoff_free(&zero, &zero, -1.0, [0.0; 3]).is_err());
}

#[test]
fn free_wave_matches_spectral_oracle() {
    let kappa = 0.5;
    let grid = GridSpec::new(8, 2.0, kappa).unwrap();
    let mut r = rng(41);
    let f = SpectralField::from_modes(grid, &Mode::cosine([1, 0, 0], 0.1))
        .unwrap()
        .add(&random_field(grid, 2, 2.0, &mut r).scaled(0.05))
        .unwrap();
    let g = random_field(grid, 2, 2.0, &mut r).scaled(0.05);
    let h = f
        .add(&SpectralField::constant(grid, 1.0))
        .unwrap()
        .scaled(kappa)
        .add(&g)
        .unwrap();
    for t in [0.5, 1.0, 2.0] {
        let exact = undamped_free_wave(&f, &h, t).unwrap();
        for x in probe_points() {
            let want = exact.eval_at(x);
            let got = kirchhoff_free(&f, &h, t, x).unwrap();
            assert!((got - want).abs() <= 1e-6 * want.abs(), "t={t} {got} vs {want}");
        }
    }
}

#[test]
fn hypothesis_examples() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let zero = SpectralField::zeros(grid);
    let one = SourceSpec::Constant(1.0);
    assert!(check_positivity_hypotheses(&zero, &zero, &one, &[0.0, 1.0])
        .unwrap()
        .all());
    let neg = SpectralField::constant(grid, -0.1);
    let flags = check_positivity_hypotheses(&zero, &neg, &one, &[0.0]).unwrap();
    assert!(!flags.g_nonnegative && flags.source_positive && flags.laplacian_nonnegative);
    let f = SpectralField::from_fn(grid, |x| 0.2 + 0.1 * x[0].cos());
    let flags = check_positivity_hypotheses(&f, &zero, &one, &[0.0]).unwrap();
    assert!(!flags.laplacian_nonnegative && flags.one_plus_f_positive);
    assert!((flags.min_laplacian_f + 0.1).abs() < 1e-14);
    let flags = check_positivity_hypotheses(&zero, &zero, &positive_source(), &[0.0, 2.0]).unwrap();
    assert!(flags.all() && (flags.min_source - 0.7).abs() < 1e-14);
}

#[test]
fn source_term_is_monotone() {
    let mut r = rng(43);
    for _ in 0..1000 {
        let p1: f64 = r.gen_range(0.0..5.0);
        let p2 = p1 + r.gen_range(0.0..5.0);
        let a = r.gen_range(0.0..10.0);
        let t = r.gen_range(0.0..10.0);
        let kappa = r.gen_range(0.01..0.99);
        assert!(iteration_source(p2, a, t, kappa) >= iteration_source(p1, a, t, kappa));
    }
}

#[test]
fn source_free_iteration_reproduces_damped_wave() {
    // with a = 0 the limit is exp(kappa t) (1 + u) for the linear damped wave u
    let kappa = 0.5;
    let grid = GridSpec::new(8, 2.0, kappa).unwrap();
    let mut r = rng(47);
    let f = random_field(grid, 2, 2.0, &mut r).scaled(0.1);
    let g = random_field(grid, 2, 2.0, &mut r).scaled(0.1);
    // fourth order in the time step
    let max_err = |nodes: usize| {
        let report =
            kirchhoff_iterate(&f, &g, &SourceSpec::Constant(0.0), 1.0, nodes, 8, &Kirchhoff::default()).unwrap();
        let lin = solve_linear(&WaveState::new(0.0, f.clone(), g.clone()).unwrap(), None, 1.0, nodes).unwrap();
        let top = report.levels.last().unwrap();
        let err = lin
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let phi = top.values(i).unwrap();
                let u = s.u.values().unwrap();
                let scale = (kappa * s.time).exp();
                phi.iter()
                    .zip(&u)
                    .map(|(p, u)| (p - scale * (1.0 + u)).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        (err, report)
    };
    let (coarse, _) = max_err(21);
    let (fine, report) = max_err(41);
    assert!(fine < 1e-7, "{fine:e}");
    assert!(coarse / fine > 8.0, "{coarse:e} {fine:e}");
    // successive differences shrink
    let d = &report.successive_differences;
    assert!(d.windows(2).skip(1).all(|w| w[1] < w[0]));
}

#[test]
fn constant_data_converge_to_scalar_ode() {
    let kappa = 0.5;
    let grid = GridSpec::new(4, 2.0, kappa).unwrap();
    let (a0, f0, g0) = (1.0, 0.2, 0.3);
    let f = SpectralField::constant(grid, f0);
    let g = SpectralField::constant(grid, g0);
    let report = kirchhoff_iterate(&f, &g, &SourceSpec::Constant(a0), 1.0, 81, 8, &Kirchhoff::default()).unwrap();
    let top = report.levels.last().unwrap();
    let rhs = |t: f64, y: &[f64]| {
        vec![
            y[1],
            (-3.0 * kappa * t).exp() * a0 * y[0].powi(3) + kappa * kappa * y[0],
        ]
    };
    let phi0 = 1.0 + f0;
    let times = &top.times[1..];
    let reference = rkf45(rhs, 0.0, &[phi0, kappa * phi0 + g0], times, 1e-13);
    for (i, r) in reference.iter().enumerate() {
        let v = top.values(i + 1).unwrap();
        assert!(
            v.iter().all(|p| (p - r[0]).abs() < 1e-4),
            "t={} {} vs {}",
            times[i],
            v[0],
            r[0]
        );
    }
    assert!(report.max_decrease <= 1e-10);
}

#[test]
fn iteration_is_monotone_and_dominated() {
    let kappa = 0.5;
    // the iterate is collocated, the Picard reference dealiased; 16^3 keeps the aliasing gap below 1e-6
    let grid = GridSpec::new(16, 2.0, kappa).unwrap();
    let f = SpectralField::constant(grid, 0.1);
    let g = bump(grid, 0.05);
    for source in [SourceSpec::Constant(0.5), positive_source()] {
        let flags = check_positivity_hypotheses(&f, &g, &source, &[0.0, 1.0]).unwrap();
        assert!(flags.all());
        let report = kirchhoff_iterate(&f, &g, &source, 1.0, 81, 6, &Kirchhoff::default()).unwrap();
        assert!(report.max_decrease <= 1e-10, "{}", report.max_decrease);
        assert!(report.min_free_wave > 0.0);
        let init = WaveState::new(0.0, f.clone(), g.clone()).unwrap();
        let opts = PicardOptions {
            radius: 10.0,
            tol: 1e-12,
            max_iter: 60,
            samples: 81,
        };
        let (traj, pic) = picard_solve(&init, &source, 1.0, &opts).unwrap();
        assert!(pic.converged);
        for level in &report.levels {
            for (i, s) in traj.states.iter().enumerate() {
                let phi = level.values(i).unwrap();
                let u = s.u.values().unwrap();
                let scale = (kappa * s.time).exp();
                for (p, u) in phi.iter().zip(&u) {
                    assert!(
                        *p <= scale * (1.0 + u) + 1e-6,
                        "level {} t={} excess {:e}",
                        level.level,
                        s.time,
                        p - scale * (1.0 + u)
                    );
                }
            }
        }
    }
}

#[test]
fn interpolation_outside_grid_is_rejected() {
    let grid = GridSpec::new(4, 2.0, 0.5).unwrap();
    let f = SpectralField::zeros(grid);
    let report = kirchhoff_iterate(&f, &f, &SourceSpec::Constant(1.0), 1.0, 11, 2, &Kirchhoff::default()).unwrap();
    let top = report.levels.last().unwrap();
    assert!(top.at(0.55, [0.1, 0.2, 0.3]).is_ok());
    assert!(top.at(1.5, [0.1, 0.2, 0.3]).is_err());
}

#[test]
fn runs_stay_positive() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let zero = WaveState::new(0.0, SpectralField::zeros(grid), SpectralField::zeros(grid)).unwrap();
    let traj = solve_linear(&zero, None, 2.0, 5).unwrap();
    assert_eq!(min_one_plus_u(&traj).unwrap().value, 1.0);

    // hypotheses hold and the run blows up
    let f = SpectralField::zeros(grid);
    let g = SpectralField::constant(grid, 1.0).add(&bump(grid, 0.2)).unwrap();
    let source = SourceSpec::Constant(8.0);
    assert!(check_positivity_hypotheses(&f, &g, &source, &[0.0]).unwrap().all());
    let init = WaveState::new(0.0, f, g).unwrap();
    let traj = timestep_solve(&init, &source, 5.0, &TimestepOptions::new(1e-3).record_every(10)).unwrap();
    assert!(traj.blowup_suspected());
    assert!(min_one_plus_u(&traj).unwrap().value > 0.0);

    // strongly negative g: reported only
    let g = SpectralField::from_fn(grid, |x| -2.0 * (1.0 + x[0].cos()));
    let init = WaveState::new(0.0, SpectralField::zeros(grid), g).unwrap();
    let traj = timestep_solve(&init, &SourceSpec::Constant(0.1), 3.0, &TimestepOptions::new(1e-2)).unwrap();
    let low = min_one_plus_u(&traj).unwrap();
    assert!(low.value.is_finite() && low.time >= 0.0);
}
