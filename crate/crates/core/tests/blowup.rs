mod common;

use common::oracle::{random_field, rkf45, rng};
use nordstrom_core::blowup::{
    certificate, check_hypotheses, detect_pde_blowup, integrate_f_ode, integrate_g_ode, jensen_gap, time_map,
    time_map_inverse, REASON_ENERGY, REASON_LAPLACIAN, REASON_MEAN_VELOCITY,
};
use nordstrom_core::evolver::{timestep_solve, TimestepOptions};
use nordstrom_core::spectral::{GridSpec, Mode, SourceSpec, SpectralField, WaveState};
use rand::Rng;

/// Closed-form bound evaluated directly through `ln(1/beta)`.
fn tau0_oracle(a0: f64, f0: f64, g0: f64, kappa: f64) -> f64 {
    let lambda = ((1.0 + f0).powi(4) - 2.0 * g0 * g0 / a0).powf(0.25);
    let beta = (1.0 + f0 - lambda) / (1.0 + f0 + lambda);
    2f64.sqrt() * kappa / (lambda * a0.sqrt()) * (1.0 / beta).ln() + 1.0
}

#[test]
fn reference_certificate() {
    let c = certificate(8.0, 0.0, 1.0, 0.5).unwrap();
    assert!(c.certifies_blowup && c.reason.is_none() && !c.inconclusive);
    assert!((c.lambda.powi(4) - 0.75).abs() < 1e-15);
    // frozen from a 30-digit evaluation
    assert!((c.lambda - 0.9306048591020996).abs() < 1e-15);
    assert!((c.beta - 0.035_944_766_517_460_86).abs() < 1e-15);
    assert!((c.tau0 - 1.893443589292596).abs() < 1e-13);
    let t0 = c.t0.unwrap();
    assert!((t0 - 2.239080756058743).abs() < 1e-11);
    assert!((c.tau0 - 1.8935).abs() < 1e-4 && (t0 - 2.2393).abs() < 5e-4);
    assert!((time_map(t0, 0.5).unwrap() - c.tau0).abs() < 1e-12);
    assert!(c.lambda <= 1.0 && c.beta > 0.0 && c.beta < 1.0);
    assert!((c.tau0 - tau0_oracle(8.0, 0.0, 1.0, 0.5)).abs() < 1e-13);
}

#[test]
fn certificate_rejections() {
    let err = certificate(1.0, 0.0, 1.0, 0.5).unwrap_err();
    assert!(err.to_string().contains(REASON_ENERGY));
    let c = certificate(8.0, 0.0, 0.0, 0.5).unwrap();
    assert!(!c.certifies_blowup);
    assert_eq!(c.reason.as_deref(), Some(REASON_MEAN_VELOCITY));
    assert!(c.tau0.is_infinite() && c.t0.is_none());
    assert!(certificate(-1.0, 0.0, 1.0, 0.5).is_err());
    assert!(certificate(8.0, -1.5, 1.0, 0.5).is_err());
}

#[test]
fn grid_hypotheses() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let zero = SpectralField::zeros(grid);
    let one = SpectralField::constant(grid, 1.0);
    let flags = check_hypotheses(1.0, &zero, &one, 0.5).unwrap();
    assert_eq!(flags.failures(), vec![REASON_ENERGY]);
    assert!(check_hypotheses(8.0, &zero, &one, 0.5).unwrap().all());
    let f = SpectralField::from_modes(grid, &Mode::cosine([1, 0, 0], -0.1)).unwrap();
    let flags = check_hypotheses(8.0, &f, &one, 0.5).unwrap();
    assert_eq!(flags.failures(), vec![REASON_LAPLACIAN]);
}

#[test]
fn degenerate_lambda_has_finite_limit() {
    // as g0 approaches sqrt(a0/2)(1 + f0)^2 the bound tends to 1 + 2 sqrt(2) kappa / (sqrt(a0)(1 + f0))
    let (a0, f0, kappa) = (8.0, 0.2, 0.5);
    let edge = (a0 / 2.0f64).sqrt() * (1.0 + f0) * (1.0 + f0);
    let limit = 1.0 + 2.0 * 2f64.sqrt() * kappa / (a0.sqrt() * (1.0 + f0));
    let exact = certificate(a0, f0, edge, kappa).unwrap();
    assert!(exact.lambda.abs() < 1e-3);
    assert!((exact.tau0 - limit).abs() < 1e-9, "{} vs {limit}", exact.tau0);
    let mut last = f64::INFINITY;
    for eps in [1e-1, 1e-2, 1e-4, 1e-8] {
        let c = certificate(a0, f0, edge * (1.0 - eps), kappa).unwrap();
        let gap = (c.tau0 - limit).abs();
        assert!(gap < last);
        last = gap;
    }
}

#[test]
fn large_source_bound_approaches_one() {
    let (f0, g0, kappa) = (0.0, 1.0, 0.5);
    let mut last = f64::INFINITY;
    let mut last_rel = f64::INFINITY;
    for a0 in [1e2, 1e4, 1e6] {
        let c = certificate(a0, f0, g0, kappa).unwrap();
        assert!(c.tau0 > 1.0 && c.tau0 < last);
        last = c.tau0;
        let z = 2.0 * g0 * g0 / (a0 * (1.0f64 + f0).powi(4));
        let leading = kappa * (1.0 + f0) * z.sqrt() / ((1.0 - z).powf(0.25) * g0) * (8.0 / z - 1.0).ln();
        let rel = ((c.tau0 - 1.0) - leading).abs() / (c.tau0 - 1.0);
        assert!(rel < last_rel);
        last_rel = rel;
    }
    assert!(last - 1.0 < 0.02);
}

#[test]
fn time_map_identities() {
    assert_eq!(time_map(0.0, 0.3).unwrap(), 1.0);
    assert!((time_map(4f64.ln(), 0.5).unwrap() - 1.75).abs() < 1e-15);
    let mut r = rng(11);
    for _ in 0..100 {
        let kappa = r.gen_range(0.05..0.95);
        // 2 - tau cancels for large t, so stay where exp(-2 kappa t) >= exp(-6)
        let t: f64 = r.gen_range(0.0..3.0) / kappa;
        let back = time_map_inverse(time_map(t, kappa).unwrap(), kappa).unwrap();
        assert!((back - t).abs() < 1e-12, "{t} {back}");
        let tau: f64 = r.gen_range(1.0..2.0);
        let again = time_map(time_map_inverse(tau, kappa).unwrap(), kappa).unwrap();
        assert!((again - tau).abs() < 1e-12);
    }
    assert!(time_map_inverse(2.0, 0.5).is_err());
    assert!(time_map_inverse(0.5, 0.5).is_err());
    assert!(time_map(-1.0, 0.5).is_err());
}

#[test]
fn zero_source_reduced_ode_is_linear() {
    let (f0, g0, kappa) = (0.3, 0.7, 0.4);
    let run = integrate_f_ode(0.0, f0, g0, kappa, 1e6, 10.0).unwrap();
    assert!(run.blowup.is_none());
    for (t, v) in run.times.iter().zip(&run.values) {
        let exact = f0 + g0 * (1.0 - (-2.0 * kappa * t).exp()) / (2.0 * kappa);
        assert!((v - exact).abs() < 1e-10);
    }
    assert!(integrate_f_ode(0.0, f0, g0, kappa, 1e3, 10.0).is_err());
}

#[test]
fn reference_blowup_respects_certificate() {
    let run = integrate_f_ode(8.0, 0.0, 1.0, 0.5, 1e6, 5.0).unwrap();
    let b = run.blowup.expect("blows up");
    let t0 = certificate(8.0, 0.0, 1.0, 0.5).unwrap().t0.unwrap();
    assert!(b.upper <= t0, "{b:?} vs {t0}");
    assert!(b.threshold_time <= b.lower && b.lower <= b.upper);
    assert!((b.upper - b.lower) < 1e-3 * b.lower);
    // F' > 0 up to the blow-up
    assert!(run.derivatives.iter().all(|&d| d > 0.0));
    // agreement with the independent integrator before blow-up
    let times: Vec<f64> = run
        .times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < 0.9 * b.lower)
        .collect();
    let rhs = |t: f64, y: &[f64]| vec![y[1], (-0.5 * t).exp() * 8.0 * (1.0 + y[0]).powi(3) - y[1]];
    let reference = rkf45(rhs, 0.0, &[0.0, 1.0], &times, 1e-13);
    for (t, r) in times.iter().zip(&reference) {
        let i = run.times.iter().position(|s| s == t).unwrap();
        assert!((run.values[i] - r[0]).abs() < 1e-7 * r[0].abs().max(1.0));
    }
    let g = integrate_g_ode(8.0, 0.0, 1.0, 0.5, 1e6, 5.0)
        .unwrap()
        .blowup
        .expect("blows up");
    assert!((g.estimate() - b.estimate()).abs() < 0.02 * b.estimate());
}

#[test]
fn certified_parameter_sets_blow_up_in_time() {
    let mut r = rng(23);
    let mut tested = 0;
    while tested < 20 {
        let a0 = r.gen_range(1.0..200.0);
        let f0 = r.gen_range(-0.5..1.0);
        let g0 = r.gen_range(0.01..3.0);
        let kappa = r.gen_range(0.05..0.95);
        let Ok(c) = certificate(a0, f0, g0, kappa) else {
            continue;
        };
        if !c.certifies_blowup {
            continue;
        }
        let t0 = c.t0.unwrap();
        let run = integrate_f_ode(a0, f0, g0, kappa, 1e6, t0 + 1.0).unwrap();
        let b = run.blowup.expect("certified data blows up");
        assert!(b.lower <= t0, "a0={a0} f0={f0} g0={g0} kappa={kappa}: {b:?} vs {t0}");
        let g = integrate_g_ode(a0, f0, g0, kappa, 1e6, t0 + 1.0)
            .unwrap()
            .blowup
            .unwrap();
        assert!((g.estimate() - b.estimate()).abs() < 0.02 * b.estimate());
        tested += 1;
    }
}

#[test]
fn jensen_examples() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let a = SourceSpec::Constant(2.0);
    let (l, r) = jensen_gap(&SpectralField::zeros(grid), &a, 0.0, 2.0).unwrap();
    assert!((l - 2.0).abs() < 1e-15 && (r - 2.0).abs() < 1e-15);
    let u = SpectralField::from_modes(grid, &Mode::cosine([1, 0, 0], 0.5)).unwrap();
    let (l, r) = jensen_gap(&u, &SourceSpec::Constant(1.0), 0.0, 1.0).unwrap();
    assert!((l - 1.375).abs() < 1e-14 && (r - 1.0).abs() < 1e-15);
    let big = SpectralField::from_modes(grid, &Mode::cosine([1, 0, 0], 1.5)).unwrap();
    assert!(jensen_gap(&big, &a, 0.0, 2.0).is_err());
}

#[test]
fn jensen_holds_on_random_fields() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let mut r = rng(29);
    let mut count = 0;
    while count < 100 {
        let u = random_field(grid, 3, 1.0, &mut r);
        let (lo, _) = u.grid_extrema().unwrap();
        // keep the grid minimum of 1 + u between 0.05 and 0.9
        let u = u.scaled(r.gen_range(0.1..0.95) / lo.abs());
        let a0 = r.gen_range(0.1..10.0);
        match jensen_gap(&u, &SourceSpec::Constant(a0), 0.0, a0) {
            Ok((l, rhs)) => {
                assert!(l >= rhs - 1e-10, "{l} < {rhs}");
                count += 1;
            }
            Err(_) => continue,
        }
    }
}

#[test]
fn pde_detection() {
    let grid = GridSpec::new(8, 2.0, 0.5).unwrap();
    let small = WaveState::new(
        0.0,
        SpectralField::from_modes(grid, &Mode::cosine([1, 1, 0], 0.01)).unwrap(),
        SpectralField::zeros(grid),
    )
    .unwrap();
    let traj = timestep_solve(&small, &SourceSpec::Constant(0.01), 5.0, &TimestepOptions::new(0.01)).unwrap();
    let d = detect_pde_blowup(&traj);
    assert!(d.time.is_none() && d.mean_bound_holds);
    assert_eq!(d.norms.len(), traj.len());

    let grid = GridSpec::new(4, 2.0, 0.5).unwrap();
    let big = WaveState::new(0.0, SpectralField::zeros(grid), SpectralField::constant(grid, 1.0)).unwrap();
    let traj = timestep_solve(
        &big,
        &SourceSpec::Constant(8.0),
        5.0,
        &TimestepOptions::new(1e-4).record_every(100),
    )
    .unwrap();
    let d = detect_pde_blowup(&traj);
    assert!(d.mean_bound_holds);
    let t_pde = d.time.expect("blow-up detected");
    let t_ode = integrate_f_ode(8.0, 0.0, 1.0, 0.5, 1e6, 5.0)
        .unwrap()
        .blowup
        .unwrap()
        .estimate();
    assert!((t_pde - t_ode).abs() < 0.02 * t_ode, "{t_pde} vs {t_ode}");
    assert!(t_pde <= certificate(8.0, 0.0, 1.0, 0.5).unwrap().t0.unwrap());
}
