//! Positivity of `1 + u` through the field `phi = exp(kappa t) (1 + u)`, which
//! solves `phi_tt - Laplace(phi) = exp(-3 kappa t) a phi^3 + kappa^2 phi` with
//! `phi(0) = 1 + f` and `phi_t(0) = kappa (1 + f) + g`.
//!
//! The monotone iteration starts from `phi_0 = 0` and feeds the right-hand side
//! of level `n` into Kirchhoff's formula to get level `n + 1`.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::quadrature::{cubic_weights, GaussLegendre};
use crate::spectral::{forward_transform, laplacian, GridSpec, SourceSpec, SpectralField, Wavevector};
use crate::trajectory::Trajectory;

/// Slack for sign checks on analytically non-negative data.
pub const SIGN_TOL: f64 = 1e-12;

/// Product rule on the unit sphere: Gauss–Legendre in `cos(theta)` times a
/// uniform rule in `phi`, exact for spherical polynomials up to `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl SphereQuadrature {
    pub fn new(degree: usize) -> Self {
        let polar = GaussLegendre::new(degree / 2 + 1);
        let azimuth = degree + 1;
        let mut nodes = Vec::with_capacity(polar.nodes.len() * azimuth);
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (&z, &w) in polar.nodes.iter().zip(&polar.weights) {
            let s = (1.0 - z * z).sqrt();
            for j in 0..azimuth {
                let phi = 2.0 * PI * j as f64 / azimuth as f64;
                nodes.push([s * phi.cos(), s * phi.sin(), z]);
                weights.push(w * 2.0 * PI / azimuth as f64);
            }
        }
        Self { nodes, weights, degree }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Spherical mean `(1/4pi) sum w f(xi)`.
    pub fn mean(&self, mut f: impl FnMut([f64; 3]) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum::<f64>()
            / (4.0 * PI)
    }

    /// Spherical mean of `exp(i k . x)` at radius `r`, relative to its centre value.
    pub fn translation(&self, r: f64, k: [f64; 3]) -> f64 {
        self.mean(|x| (r * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])).cos())
    }
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        Self::new(35)
    }
}

/// Quadrature for Kirchhoff's formula: a sphere rule and a radial rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Kirchhoff {
    pub sphere: SphereQuadrature,
    pub radial: GaussLegendre,
}

impl Default for Kirchhoff {
    fn default() -> Self {
        Self {
            sphere: SphereQuadrature::default(),
            radial: GaussLegendre::new(32),
        }
    }
}

fn shifted(x: [f64; 3], r: f64, xi: [f64; 3]) -> [f64; 3] {
    let tau = 2.0 * PI;
    [
        (x[0] + r * xi[0]).rem_euclid(tau),
        (x[1] + r * xi[1]).rem_euclid(tau),
        (x[2] + r * xi[2]).rem_euclid(tau),
    ]
}

impl Kirchhoff {
    /// Free wave `phi_1(t, x)` with `phi(0) = 1 + f`, `phi_t(0) = h`, from
    /// spherical means of `h` and `1 + f` and a ball integral of `Laplace(f)`.
    pub fn free_wave(&self, f: &SpectralField, h: &SpectralField, t: f64, x: [f64; 3]) -> Result<f64> {
        f.ensure_same_grid(h)?;
        if !(t >= 0.0) {
            return Err(domain(format!("Kirchhoff evaluation needs t >= 0, got {t}")));
        }
        let lap = laplacian(f);
        let sphere = &self.sphere;
        let h_mean = sphere.mean(|xi| h.eval_at(shifted(x, t, xi)));
        let f_mean = sphere.mean(|xi| f.eval_at(shifted(x, t, xi)));
        // t^2/(4pi) int_{|xi|<=1} Laplace f(x + t xi) = t^2 int_0^1 rho^2 mean_rho d rho
        let ball: f64 = self
            .radial
            .on(0.0, 1.0)
            .map(|(rho, w)| w * rho * rho * sphere.mean(|xi| lap.eval_at(shifted(x, t * rho, xi))))
            .sum();
        Ok(t * h_mean + t * t * ball + 1.0 + f_mean)
    }

    /// Spherical-mean multipliers by `(|k1|, |k2|, |k3|)` at radius `r`.
    fn multipliers(&self, grid: GridSpec, r: f64) -> HashMap<[i64; 3], f64> {
        let mut keys: Vec<[i64; 3]> = (0..grid.len()).map(|i| abs_key(grid.wavevector(i))).collect();
        keys.sort_unstable();
        keys.dedup();
        keys.into_par_iter()
            .map(|k| (k, self.sphere.translation(r, [k[0] as f64, k[1] as f64, k[2] as f64])))
            .collect()
    }

    /// Spectral multiplier of the free wave at time `t`, as
    /// `(coefficient of h, coefficient of 1 + f)` per storage index.
    fn free_multipliers(&self, grid: GridSpec, t: f64) -> Vec<(f64, f64)> {
        let sphere = self.multipliers(grid, t);
        let radial: Vec<(f64, HashMap<[i64; 3], f64>)> = self
            .radial
            .on(0.0, 1.0)
            .map(|(rho, w)| (w * rho * rho, self.multipliers(grid, t * rho)))
            .collect();
        (0..grid.len())
            .map(|i| {
                let key = abs_key(grid.wavevector(i));
                let m = sphere[&key];
                let ball: f64 = radial.iter().map(|(w, table)| w * table[&key]).sum();
                (t * m, m - t * t * grid.k2(i) * ball)
            })
            .collect()
    }
}

fn abs_key(k: Wavevector) -> [i64; 3] {
    [k.0[0].abs(), k.0[1].abs(), k.0[2].abs()]
}

/// Pointwise free wave with the default quadrature.
pub fn kirchhoff_free(f: &SpectralField, h: &SpectralField, t: f64, x: [f64; 3]) -> Result<f64> {
    Kirchhoff::default().free_wave(f, h, t, x)
}

/// `exp(-3 kappa t) a phi^3 + kappa^2 phi`, increasing in `phi >= 0` when `a > 0`.
pub fn iteration_source(phi: f64, a: f64, t: f64, kappa: f64) -> f64 {
    (-3.0 * kappa * t).exp() * a * phi * phi * phi + kappa * kappa * phi
}

/// One level of the iteration sampled on a uniform time grid.
#[derive(Debug, Clone)]
pub struct PhiIterate {
    pub level: usize,
    pub times: Vec<f64>,
    pub fields: Vec<SpectralField>,
}

impl PhiIterate {
    pub fn values(&self, time_index: usize) -> Result<Vec<f64>> {
        self.fields[time_index].values()
    }

    /// Cubic-in-time, spectral-in-space evaluation.
    pub fn at(&self, t: f64, x: [f64; 3]) -> Result<f64> {
        let (t0, t1) = (self.times[0], *self.times.last().expect("non-empty"));
        if !(t >= t0 && t <= t1) {
            return Err(domain(format!("time {t} outside the sampled range [{t0}, {t1}]")));
        }
        let pos = (t - t0) / (t1 - t0) * (self.times.len() - 1) as f64;
        let (start, w) = cubic_weights(pos, self.times.len());
        Ok((0..4).map(|j| w[j] * self.fields[start + j].eval_at(x)).sum())
    }
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub levels: Vec<PhiIterate>,
    /// Largest grid change between consecutive levels, starting with `phi_1 - phi_0`.
    pub successive_differences: Vec<f64>,
    /// Largest grid value of `phi_n - phi_{n+1}` over all levels (negative when monotone).
    pub max_decrease: f64,
    pub min_free_wave: f64,
}

/// Integration weights over `[t_0, t_i]` on uniform nodes, built from cubic
/// Lagrange interpolants on four-node stencils (may use nodes past `t_i`).
fn retarded_weights(i: usize, count: usize, dt: f64) -> Vec<(usize, f64)> {
    const INTERIOR: [f64; 4] = [-1.0, 13.0, 13.0, -1.0];
    const FIRST: [f64; 4] = [9.0, 19.0, -5.0, 1.0];
    const LAST: [f64; 4] = [1.0, -5.0, 19.0, 9.0];
    let mut w = vec![0.0; count];
    for j in 0..i {
        let (start, stencil) = if j == 0 {
            (0, FIRST)
        } else if j + 2 >= count {
            (count - 4, LAST)
        } else {
            (j - 1, INTERIOR)
        };
        for (o, c) in stencil.iter().enumerate() {
            w[start + o] += c * dt / 24.0;
        }
    }
    w.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect()
}

/// Runs `levels` steps of the monotone iteration on the collocation grid of
/// `f` and `time_nodes` uniform times in `[0, t_end]`.
pub fn kirchhoff_iterate(
    f: &SpectralField,
    g: &SpectralField,
    source: &SourceSpec,
    t_end: f64,
    time_nodes: usize,
    levels: usize,
    quad: &Kirchhoff,
) -> Result<IterationReport> {
    f.ensure_same_grid(g)?;
    let grid = f.grid;
    grid.validate()?;
    source.validate(grid)?;
    if levels == 0 {
        return Err(invalid("need at least one level"));
    }
    if time_nodes < 4 {
        return Err(invalid("need at least four time nodes"));
    }
    if !(t_end > 0.0) {
        return Err(invalid(format!("t_end must be positive, got {t_end}")));
    }
    let kappa = grid.kappa;
    let dt = t_end / (time_nodes - 1) as f64;
    let times: Vec<f64> = (0..time_nodes).map(|i| i as f64 * dt).collect();
    let one_plus_f = f.add(&SpectralField::constant(grid, 1.0))?;
    let h = one_plus_f.scaled(kappa).add(g)?;

    let free: Vec<SpectralField> = times
        .iter()
        .map(|&t| {
            let mult = quad.free_multipliers(grid, t);
            let coeffs = (0..grid.len())
                .map(|i| h.coeffs[i] * mult[i].0 + one_plus_f.coeffs[i] * mult[i].1)
                .collect();
            SpectralField { grid, coeffs }
        })
        .collect();

    // lag kernels r M(r, k) for r = d dt, d = 0..time_nodes
    let kernels: Vec<Vec<f64>> = (0..time_nodes)
        .map(|d| {
            let r = d as f64 * dt;
            let table = quad.multipliers(grid, r);
            (0..grid.len())
                .map(|i| r * table[&abs_key(grid.wavevector(i))])
                .collect()
        })
        .collect();
    let kernel = |lag: isize, i: usize| -> f64 {
        // r M(r) is odd in r
        if lag >= 0 {
            kernels[lag as usize][i]
        } else {
            -kernels[(-lag) as usize][i]
        }
    };

    let spatial = match source {
        SourceSpec::Constant(_) => None,
        SourceSpec::Separable { .. } => Some(source.spatial_field(grid)?.values()?),
    };
    let a_at = |t: f64, idx: usize| -> f64 {
        let env = source.envelope(t);
        spatial.as_ref().map_or(env, |s| env * s[idx])
    };

    let zero = PhiIterate {
        level: 0,
        times: times.clone(),
        fields: vec![SpectralField::zeros(grid); time_nodes],
    };
    let mut levels_out = vec![zero];
    let mut successive_differences = Vec::new();
    let mut max_decrease = f64::NEG_INFINITY;
    let mut prev_values: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; time_nodes];
    for level in 1..=levels {
        let sources: Vec<SpectralField> = times
            .par_iter()
            .zip(&prev_values)
            .map(|(&t, phi)| {
                let vals: Vec<f64> = phi
                    .iter()
                    .enumerate()
                    .map(|(idx, &p)| iteration_source(p, a_at(t, idx), t, kappa))
                    .collect();
                forward_transform(grid, &vals)
            })
            .collect::<Result<_>>()?;
        let fields: Vec<SpectralField> = (0..time_nodes)
            .into_par_iter()
            .map(|i| {
                let mut coeffs = free[i].coeffs.clone();
                for (j, w) in retarded_weights(i, time_nodes, dt) {
                    let lag = i as isize - j as isize;
                    for (idx, c) in coeffs.iter_mut().enumerate() {
                        *c += sources[j].coeffs[idx] * (w * kernel(lag, idx));
                    }
                }
                SpectralField { grid, coeffs }
            })
            .collect();
        let values: Vec<Vec<f64>> = fields.iter().map(|f| f.values()).collect::<Result<_>>()?;
        let mut diff: f64 = 0.0;
        for (new, old) in values.iter().zip(&prev_values) {
            for (a, b) in new.iter().zip(old) {
                diff = diff.max((a - b).abs());
                max_decrease = max_decrease.max(b - a);
            }
        }
        successive_differences.push(diff);
        prev_values = values;
        levels_out.push(PhiIterate {
            level,
            times: times.clone(),
            fields,
        });
    }
    let min_free_wave = free
        .iter()
        .map(|f| f.values().map(|v| v.into_iter().fold(f64::INFINITY, f64::min)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(IterationReport {
        levels: levels_out,
        successive_differences,
        max_decrease,
        min_free_wave,
    })
}

/// Grid minima behind the positivity hypotheses, with pass flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityFlags {
    pub min_source: f64,
    pub min_one_plus_f: f64,
    pub min_g: f64,
    pub min_laplacian_f: f64,
    pub source_positive: bool,
    pub one_plus_f_positive: bool,
    pub g_nonnegative: bool,
    pub laplacian_nonnegative: bool,
}

impl PositivityFlags {
    pub fn all(&self) -> bool {
        self.source_positive && self.one_plus_f_positive && self.g_nonnegative && self.laplacian_nonnegative
    }
}

fn grid_min(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn check_positivity_hypotheses(
    f: &SpectralField,
    g: &SpectralField,
    source: &SourceSpec,
    probe_times: &[f64],
) -> Result<PositivityFlags> {
    f.ensure_same_grid(g)?;
    let grid = f.grid;
    let spatial = match source {
        SourceSpec::Constant(_) => None,
        SourceSpec::Separable { .. } => Some(source.spatial_field(grid)?.values()?),
    };
    let mut min_source = f64::INFINITY;
    for &t in probe_times {
        let env = source.envelope(t);
        let m = match &spatial {
            None => env,
            Some(s) => s.iter().map(|v| env * v).fold(f64::INFINITY, f64::min),
        };
        min_source = min_source.min(m);
    }
    let min_one_plus_f = 1.0 + grid_min(&f.values()?);
    let min_g = grid_min(&g.values()?);
    let min_laplacian_f = grid_min(&laplacian(f).values()?);
    Ok(PositivityFlags {
        min_source,
        min_one_plus_f,
        min_g,
        min_laplacian_f,
        source_positive: min_source > 0.0,
        one_plus_f_positive: min_one_plus_f > 0.0,
        g_nonnegative: min_g >= -SIGN_TOL,
        laplacian_nonnegative: min_laplacian_f >= -SIGN_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinSample {
    pub value: f64,
    pub point: [f64; 3],
    pub time: f64,
}

/// Smallest `1 + u` over the collocation grid and all samples.
pub fn min_one_plus_u(trajectory: &Trajectory) -> Result<MinSample> {
    let grid = trajectory.grid();
    let mut best = MinSample {
        value: f64::INFINITY,
        point: [0.0; 3],
        time: trajectory.states[0].time,
    };
    for s in &trajectory.states {
        for (idx, v) in s.u.values()?.into_iter().enumerate() {
            if 1.0 + v < best.value {
                best = MinSample {
                    value: 1.0 + v,
                    point: grid.point(idx),
                    time: s.time,
                };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rule_weights_and_moments() {
        let q = SphereQuadrature::default();
        assert_eq!(q.len(), 648);
        let total: f64 = q.weights.iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12);
        // mean of x^2 is 1/3, of x^2 y^2 z^2 is 1/105
        assert!((q.mean(|x| x[0] * x[0]) - 1.0 / 3.0).abs() < 1e-14);
        assert!((q.mean(|x| (x[0] * x[1] * x[2]).powi(2)) - 1.0 / 105.0).abs() < 1e-15);
        // mean of cos(r k.x) is sin(r|k|)/(r|k|)
        let r = 2.5;
        let s = 5.0f64.sqrt() * r;
        assert!((q.translation(r, [1.0, 2.0, 0.0]) - s.sin() / s).abs() < 1e-13);
    }

    #[test]
    fn retarded_weights_integrate_cubics() {
        let dt = 0.1;
        for i in 1..10 {
            let w = retarded_weights(i, 10, dt);
            let t = i as f64 * dt;
            let q: f64 = w.iter().map(|&(j, w)| w * (j as f64 * dt).powi(3)).sum();
            assert!((q - t.powi(4) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn iteration_source_values() {
        assert_eq!(iteration_source(0.0, 3.0, 1.0, 0.5), 0.0);
        assert!((iteration_source(1.0, 1.0, 0.0, 0.5) - 1.25).abs() < 1e-15);
    }
}
