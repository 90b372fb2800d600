//! Exact per-mode solutions of the damped linear problem
//!
//! ```text
//! u_tt + 2 kappa u_t - Laplace(u) = exp(-kappa t) F(t, x)
//! ```
//!
//! Homogeneous parts are closed-form; Duhamel integrals use composite
//! 8-point Gauss–Legendre panels no wider than `min(0.25, pi / (4 omega))`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, invalid, Error, Result};
use crate::quadrature::{lagrange4, panels, stencil_start, GaussLegendre};
use crate::spectral::{homogeneous_norm_sq, GridSpec, SpectralField, WaveState, Wavevector};
use crate::trajectory::Trajectory;

const GL_POINTS: usize = 8;
const MAX_PANEL: f64 = 0.25;

/// Time profile `F_k(t)` of one Fourier coefficient of the forcing.
pub trait ModeForcing {
    fn at(&self, tau: f64) -> Complex64;
}

impl<F: Fn(f64) -> Complex64> ModeForcing for F {
    fn at(&self, tau: f64) -> Complex64 {
        self(tau)
    }
}

/// No forcing.
pub struct Unforced;

impl ModeForcing for Unforced {
    fn at(&self, _tau: f64) -> Complex64 {
        Complex64::default()
    }
}

/// Uniformly sampled forcing coefficient with cubic interpolation.
#[derive(Debug, Clone)]
pub struct SampledForcing {
    pub k: Wavevector,
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

impl ModeForcing for SampledForcing {
    fn at(&self, tau: f64) -> Complex64 {
        let count = self.values.len();
        match count {
            0 => Complex64::default(),
            1 => self.values[0],
            2 | 3 => {
                let pos = ((tau - self.t0) / self.dt).clamp(0.0, (count - 1) as f64);
                let j = (pos.floor() as usize).min(count - 2);
                let s = pos - j as f64;
                self.values[j] * (1.0 - s) + self.values[j + 1] * s
            }
            _ => {
                let pos = ((tau - self.t0) / self.dt).clamp(0.0, (count - 1) as f64);
                let (start, w) = crate::quadrature::cubic_weights(pos, count);
                (0..4).map(|i| self.values[start + i] * w[i]).sum()
            }
        }
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("kappa must lie in (0, 1), got {kappa}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time must be finite and non-negative, got {t}")))
    }
}

/// Largest admissible Duhamel panel for angular frequency `omega`.
pub fn panel_width(omega: f64) -> f64 {
    if omega > 0.0 {
        MAX_PANEL.min(PI / (4.0 * omega))
    } else {
        MAX_PANEL
    }
}

/// Characteristic roots of `mu^2 + 2 kappa mu + |k|^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRoots {
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub omega: f64,
}

impl ModeRoots {
    pub fn new(k2: f64, kappa: f64) -> Self {
        if k2 == 0.0 {
            Self {
                mu1: Complex64::new(0.0, 0.0),
                mu2: Complex64::new(-2.0 * kappa, 0.0),
                omega: 0.0,
            }
        } else {
            let omega = (k2 - kappa * kappa).sqrt();
            Self {
                mu1: Complex64::new(-kappa, omega),
                mu2: Complex64::new(-kappa, -omega),
                omega,
            }
        }
    }

    /// `(u, u_t)` after time `s` of free evolution from `(f, g)`.
    pub fn propagate(&self, f: Complex64, g: Complex64, s: f64) -> (Complex64, Complex64) {
        let d = self.mu1 - self.mu2;
        let c1 = (g - self.mu2 * f) / d;
        let c2 = (self.mu1 * f - g) / d;
        let e1 = (self.mu1 * s).exp();
        let e2 = (self.mu2 * s).exp();
        (c1 * e1 + c2 * e2, self.mu1 * c1 * e1 + self.mu2 * c2 * e2)
    }

    /// Converts the pair `J_i = int exp(mu_i (t - tau)) N(tau) dtau` into `(u, u_t)`.
    pub fn duhamel(&self, j1: Complex64, j2: Complex64) -> (Complex64, Complex64) {
        let d = self.mu1 - self.mu2;
        ((j1 - j2) / d, (self.mu1 * j1 - self.mu2 * j2) / d)
    }
}

/// `(u_k(t), d/dt u_k(t))` for a mode with `k != 0`.
pub fn solve_mode_nonzero_with_derivative(
    k: Wavevector,
    kappa: f64,
    f: Complex64,
    g: Complex64,
    forcing: &impl ModeForcing,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    check_kappa(kappa)?;
    check_time(t)?;
    let k2 = k.norm2() as f64;
    if k2 == 0.0 {
        return Err(invalid("zero wavevector passed to the non-zero mode solver"));
    }
    let omega = (k2 - kappa * kappa).sqrt();
    let rule = GaussLegendre::new(GL_POINTS);
    let mut sin_part = Complex64::default();
    let mut cos_part = Complex64::default();
    for (a, b) in panels(0.0, t, panel_width(omega)) {
        for (tau, w) in rule.on(a, b) {
            let (s, c) = (omega * (t - tau)).sin_cos();
            let v = forcing.at(tau) * w;
            sin_part += v * s;
            cos_part += v * c;
        }
    }
    let (s, c) = (omega * t).sin_cos();
    let decay = (-kappa * t).exp();
    let gk = g + f * kappa;
    let u = (f * c + gk * s / omega + sin_part / omega) * decay;
    let u_t = u * -kappa + (f * (-omega * s) + gk * c + cos_part) * decay;
    Ok((u, u_t))
}

pub fn solve_mode_nonzero(
    k: Wavevector,
    kappa: f64,
    f: Complex64,
    g: Complex64,
    forcing: &impl ModeForcing,
    t: f64,
) -> Result<Complex64> {
    Ok(solve_mode_nonzero_with_derivative(k, kappa, f, g, forcing, t)?.0)
}

/// `(u_0(t), d/dt u_0(t))` for the spatial mean. Only the real part of the forcing enters.
pub fn solve_mode_zero_with_derivative(
    kappa: f64,
    f0: f64,
    g0: f64,
    forcing: &impl ModeForcing,
    t: f64,
) -> Result<(f64, f64)> {
    check_kappa(kappa)?;
    check_time(t)?;
    let rule = GaussLegendre::new(GL_POINTS);
    let mut value = 0.0;
    let mut rate = 0.0;
    for (a, b) in panels(0.0, t, MAX_PANEL) {
        for (tau, w) in rule.on(a, b) {
            let src = forcing.at(tau).re * (-kappa * tau).exp() * w;
            let tail = (-2.0 * kappa * (t - tau)).exp();
            value += -(-2.0 * kappa * (t - tau)).exp_m1() * src;
            rate += tail * src;
        }
    }
    let u = f0 + g0 * -(-2.0 * kappa * t).exp_m1() / (2.0 * kappa) + value / (2.0 * kappa);
    let u_t = g0 * (-2.0 * kappa * t).exp() + rate;
    Ok((u, u_t))
}

pub fn solve_mode_zero(kappa: f64, f0: f64, g0: f64, forcing: &impl ModeForcing, t: f64) -> Result<f64> {
    Ok(solve_mode_zero_with_derivative(kappa, f0, g0, forcing, t)?.0)
}

fn uniform_times(t0: f64, t_end: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(invalid("at least two samples are required"));
    }
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(domain(format!("end time {t_end} must exceed start time {t0}")));
    }
    let h = (t_end - t0) / (samples - 1) as f64;
    Ok((0..samples)
        .map(|j| if j + 1 == samples { t_end } else { t0 + j as f64 * h })
        .collect())
}

fn largest_omega(grid: GridSpec) -> f64 {
    let h = grid.nyquist() as f64;
    (3.0 * h * h - grid.kappa * grid.kappa).max(0.0).sqrt()
}

/// Solution on `samples` uniform times from `initial.time` to `t_end`.
///
/// `forcing(t)` returns the field `F(t)`; it is called once per quadrature node.
pub fn solve_linear(
    initial: &WaveState,
    forcing: Option<&dyn Fn(f64) -> Result<SpectralField>>,
    t_end: f64,
    samples: usize,
) -> Result<Trajectory> {
    let grid = initial.grid();
    grid.validate()?;
    check_kappa(grid.kappa)?;
    let kappa = grid.kappa;
    let t0 = initial.time;
    let times = uniform_times(t0, t_end, samples)?;
    let len = grid.len();
    let roots: Vec<ModeRoots> = (0..len).map(|i| ModeRoots::new(grid.k2(i), kappa)).collect();
    let mut j1 = vec![Complex64::default(); len];
    let mut j2 = vec![Complex64::default(); len];
    let rule = GaussLegendre::new(GL_POINTS);
    let width = panel_width(largest_omega(grid));
    let mut states = Vec::with_capacity(samples);
    for (step, &t) in times.iter().enumerate() {
        if step > 0 {
            let t_prev = times[step - 1];
            let dt = t - t_prev;
            for i in 0..len {
                j1[i] *= (roots[i].mu1 * dt).exp();
                j2[i] *= (roots[i].mu2 * dt).exp();
            }
            if let Some(forcing) = forcing {
                for (a, b) in panels(t_prev, t, width) {
                    for (tau, w) in rule.on(a, b) {
                        let field = forcing(tau)?;
                        field.ensure_same_grid(&initial.u)?;
                        let scale = w * (-kappa * tau).exp();
                        j1.par_iter_mut()
                            .zip(j2.par_iter_mut())
                            .enumerate()
                            .for_each(|(i, (a1, a2))| {
                                let v = field.coeffs[i] * scale;
                                *a1 += v * (roots[i].mu1 * (t - tau)).exp();
                                *a2 += v * (roots[i].mu2 * (t - tau)).exp();
                            });
                    }
                }
            }
        }
        let (u, u_t): (Vec<_>, Vec<_>) = (0..len)
            .into_par_iter()
            .map(|i| {
                let (h, ht) = roots[i].propagate(initial.u.coeffs[i], initial.u_t.coeffs[i], t - t0);
                let (p, pt) = roots[i].duhamel(j1[i], j2[i]);
                (h + p, ht + pt)
            })
            .unzip();
        states.push(WaveState {
            time: t,
            u: SpectralField { grid, coeffs: u },
            u_t: SpectralField { grid, coeffs: u_t },
        });
    }
    Ok(Trajectory::complete(states))
}

/// Weights turning four neighbouring forcing samples into one interval's
/// contribution to `int exp(mu (t_{j+1} - tau)) exp(-kappa (tau - t_j)) F(tau) dtau`.
/// Index 0, 1, 2 selects the stencil offset (first, interior, last interval).
fn interval_weights(mu: Complex64, kappa: f64, h: f64) -> [[Complex64; 4]; 3] {
    let rule = GaussLegendre::new(GL_POINTS);
    let width = panel_width(mu.im.abs());
    let mut out = [[Complex64::default(); 4]; 3];
    for (a, b) in panels(0.0, h, width) {
        for (s, w) in rule.on(a, b) {
            let kernel = (mu * (h - s)).exp() * ((-kappa * s).exp() * w);
            for (offset, row) in out.iter_mut().enumerate() {
                let basis = lagrange4(offset as f64 + s / h);
                for i in 0..4 {
                    row[i] += kernel * basis[i];
                }
            }
        }
    }
    out
}

/// Linear solve with a forcing known only at uniform sample times, interpolated
/// cubically in between. Returns states at the same times.
pub fn solve_linear_sampled(initial: &WaveState, times: &[f64], forcing: &[SpectralField]) -> Result<Vec<WaveState>> {
    let grid = initial.grid();
    check_kappa(grid.kappa)?;
    let kappa = grid.kappa;
    let count = times.len();
    if count < 4 {
        return Err(invalid("sampled forcing needs at least four samples"));
    }
    if forcing.len() != count {
        return Err(Error::Dimension {
            expected: count,
            got: forcing.len(),
        });
    }
    for f in forcing {
        f.ensure_same_grid(&initial.u)?;
    }
    let t0 = times[0];
    let h = (times[count - 1] - t0) / (count - 1) as f64;
    if times[0] != initial.time {
        return Err(invalid("sample times must start at the initial time"));
    }
    let len = grid.len();

    // weights depend only on |k|^2
    let mut by_k2: HashMap<i64, usize> = HashMap::new();
    let mut classes: Vec<f64> = Vec::new();
    let class_of: Vec<usize> = (0..len)
        .map(|i| {
            let k2 = grid.wavevector(i).norm2();
            *by_k2.entry(k2).or_insert_with(|| {
                classes.push(k2 as f64);
                classes.len() - 1
            })
        })
        .collect();
    struct Class {
        roots: ModeRoots,
        step1: Complex64,
        step2: Complex64,
        w1: [[Complex64; 4]; 3],
        w2: [[Complex64; 4]; 3],
    }
    let table: Vec<Class> = classes
        .par_iter()
        .map(|&k2| {
            let roots = ModeRoots::new(k2, kappa);
            Class {
                roots,
                step1: (roots.mu1 * h).exp(),
                step2: (roots.mu2 * h).exp(),
                w1: interval_weights(roots.mu1, kappa, h),
                w2: interval_weights(roots.mu2, kappa, h),
            }
        })
        .collect();
    let decay: Vec<f64> = (0..count).map(|j| (-kappa * (t0 + j as f64 * h)).exp()).collect();

    let series: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..len)
        .into_par_iter()
        .map(|i| {
            let c = &table[class_of[i]];
            let mut u = Vec::with_capacity(count);
            let mut ut = Vec::with_capacity(count);
            let (mut a1, mut a2) = (Complex64::default(), Complex64::default());
            for j in 0..count {
                if j > 0 {
                    let interval = j - 1;
                    let start = stencil_start(interval, count);
                    let offset = interval - start;
                    let mut add1 = Complex64::default();
                    let mut add2 = Complex64::default();
                    for q in 0..4 {
                        let v = forcing[start + q].coeffs[i];
                        add1 += c.w1[offset][q] * v;
                        add2 += c.w2[offset][q] * v;
                    }
                    a1 = a1 * c.step1 + add1 * decay[interval];
                    a2 = a2 * c.step2 + add2 * decay[interval];
                }
                let s = j as f64 * h;
                let (hu, hut) = c.roots.propagate(initial.u.coeffs[i], initial.u_t.coeffs[i], s);
                let (pu, put) = c.roots.duhamel(a1, a2);
                u.push(hu + pu);
                ut.push(hut + put);
            }
            (u, ut)
        })
        .collect();

    Ok((0..count)
        .map(|j| WaveState {
            time: times[j],
            u: SpectralField {
                grid,
                coeffs: series.iter().map(|s| s.0[j]).collect(),
            },
            u_t: SpectralField {
                grid,
                coeffs: series.iter().map(|s| s.1[j]).collect(),
            },
        })
        .collect())
}

/// Undamped free wave `phi_tt = Laplace(phi)` with `phi(0) = 1 + f`, `phi_t(0) = h`.
pub fn undamped_free_wave(f: &SpectralField, h: &SpectralField, t: f64) -> Result<SpectralField> {
    f.ensure_same_grid(h)?;
    let grid = f.grid;
    let coeffs = (0..grid.len())
        .map(|i| {
            let k = grid.k2(i).sqrt();
            if i == 0 {
                f.coeffs[0] + 1.0 + h.coeffs[0] * t
            } else {
                let (s, c) = (k * t).sin_cos();
                f.coeffs[i] * c + h.coeffs[i] * (s / k)
            }
        })
        .collect();
    Ok(SpectralField { grid, coeffs })
}

/// Time profile of the forcing needed by [`linear_energy_bound`].
#[derive(Debug, Clone)]
pub struct ForcingProfile {
    pub times: Vec<f64>,
    /// `||F(t)||^2` in the homogeneous `H^m` norm.
    pub homogeneous_sq: Vec<f64>,
    /// `|F_0(t)|`.
    pub mean_abs: Vec<f64>,
}

impl ForcingProfile {
    pub fn zero() -> Self {
        Self {
            times: vec![0.0],
            homogeneous_sq: vec![0.0],
            mean_abs: vec![0.0],
        }
    }

    pub fn sample(forcing: &dyn Fn(f64) -> Result<SpectralField>, m: f64, t_end: f64, samples: usize) -> Result<Self> {
        let times = uniform_times(0.0, t_end, samples)?;
        let mut homogeneous_sq = Vec::with_capacity(samples);
        let mut mean_abs = Vec::with_capacity(samples);
        for &t in &times {
            let f = forcing(t)?;
            homogeneous_sq.push(homogeneous_norm_sq(&f, m));
            mean_abs.push(f.coeffs[0].re.abs());
        }
        Ok(Self {
            times,
            homogeneous_sq,
            mean_abs,
        })
    }

    /// Trapezoidal `int_0^t ||F||^2` and `sup_{[0,t]} |F_0|`.
    fn up_to(&self, t: f64) -> (f64, f64) {
        let mut integral = 0.0;
        let mut sup: f64 = self.mean_abs.first().copied().unwrap_or(0.0);
        for j in 1..self.times.len() {
            let (a, b) = (self.times[j - 1], self.times[j]);
            if a >= t {
                break;
            }
            let hi = b.min(t);
            let frac = (hi - a) / (b - a);
            let fb = self.homogeneous_sq[j - 1] + frac * (self.homogeneous_sq[j] - self.homogeneous_sq[j - 1]);
            integral += 0.5 * (hi - a) * (self.homogeneous_sq[j - 1] + fb);
            let mb = self.mean_abs[j - 1] + frac * (self.mean_abs[j] - self.mean_abs[j - 1]);
            sup = sup.max(mb).max(self.mean_abs[j - 1]);
        }
        (integral, sup)
    }
}

/// Upper bound for `||u(t)||^2_{H^{m+1}}` in terms of the data and the forcing.
///
/// The mean-mode group carries a factor 3 so that cross terms between the
/// three contributions to `u_0` stay covered.
pub fn linear_energy_bound(initial: &WaveState, forcing: &ForcingProfile, t: f64, m: f64, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    check_time(t)?;
    let f_sq = homogeneous_norm_sq(&initial.u, m + 1.0);
    let g_sq = homogeneous_norm_sq(&initial.u_t, m);
    let (int_f, sup_f0) = forcing.up_to(t);
    let tt = 1.0 + t * t;
    let oscillating =
        2.0 * (-2.0 * kappa * t).exp() * ((1.0 + 2.0 * kappa * kappa) * tt * f_sq + 2.0 * tt * g_sq + t * tt * int_f);
    let f0 = initial.u.mean();
    let g0 = initial.u_t.mean();
    let x = -(-2.0 * kappa * t).exp_m1() / (2.0 * kappa);
    let y = -(-kappa * t).exp_m1() / kappa;
    let mean = 3.0 * (f0 * f0 + g0 * g0 * x * x + 0.25 * sup_f0 * sup_f0 * y.powi(4));
    Ok(oscillating + mean)
}
