//! Smallness thresholds for the fixed-point argument.
//!
//! The time-profile maxima are computed numerically. The Sobolev embedding,
//! product and cubic-term constants are replaced by empirical maxima over
//! seeded random probes, so they are lower estimates of the true constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral::{multiply, sobolev_norm, CubicSource, GridSpec, SourceSpec, SpectralField, Wavevector};

const PROBE_SEED: u64 = 0x6e6f_7264;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// Empirical `sup ||w||_inf / ||w||_{H^m}`.
    pub embedding: f64,
    /// Empirical `sup ||v w||_{H^m} / (||v||_{H^m} ||w||_{H^m})`.
    pub product: f64,
    /// Empirical bound of `||(1 + v)^3||_inf` over the ball.
    pub cubic_bound: f64,
    /// Empirical Lipschitz constant of `v -> (1 + v)^3` over the ball, times `product`.
    pub lipschitz: f64,
    /// Bounds on `||f||_{H^{m+1}}`, `||g||_{H^m}` then two on `sup_t ||a||_{H^m}`.
    pub bounds: [f64; 4],
    pub epsilon: f64,
}

/// Maximum of `f` on `[0, t_max]` by a scan and golden-section refinement.
fn maximize(f: impl Fn(f64) -> f64, t_max: f64) -> f64 {
    let n = 20_000;
    let step = t_max / n as f64;
    let (mut best_t, mut best) = (0.0, f(0.0));
    for i in 1..=n {
        let t = i as f64 * step;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let (mut a, mut b) = ((best_t - step).max(0.0), (best_t + step).min(t_max));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// Time-profile maxima `(M1, M2, M3)` for a damping rate.
pub fn profile_maxima(kappa: f64) -> (f64, f64, f64) {
    let t_max = 80.0 / kappa;
    let decay = |t: f64| (-2.0 * kappa * t).exp();
    let m1 = maximize(|t| 2.0 * decay(t) * (1.0 + 2.0 * kappa * kappa) * (1.0 + t * t), t_max);
    let m2 = maximize(|t| 4.0 * decay(t) * (1.0 + t * t), t_max);
    let m3 = maximize(|t| decay(t) * t * t * (1.0 + t * t), t_max);
    (m1, m2, m3)
}

fn random_probe(grid: GridSpec, rng: &mut ChaCha8Rng) -> SpectralField {
    let band = (grid.nyquist() as i64 - 1).min(3);
    let decay = rng.gen_range(0.5..3.0);
    let mut f = SpectralField::zeros(grid);
    for a in -band..=band {
        for b in -band..=band {
            for c in -band..=band {
                let idx = grid.index_of(Wavevector([a, b, c])).expect("inside band");
                let mirror = grid.mirror(idx);
                if mirror < idx {
                    continue;
                }
                let k2 = (a * a + b * b + c * c) as f64;
                let amp = (1.0 + k2).powf(-decay);
                let z = num_complex::Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
                if mirror == idx {
                    f.coeffs[idx] = num_complex::Complex64::new(z.re, 0.0);
                } else {
                    f.coeffs[idx] = z;
                    f.coeffs[mirror] = z.conj();
                }
            }
        }
    }
    f
}

fn scaled_to(f: &SpectralField, m: f64, radius: f64) -> SpectralField {
    let norm = sobolev_norm(f, m);
    if norm == 0.0 {
        f.clone()
    } else {
        f.scaled(radius / norm)
    }
}

fn sup_norm(f: &SpectralField) -> Result<f64> {
    let fine = f.grid.with_n(2 * f.n())?;
    let (lo, hi) = f.grid_extrema_on(fine)?;
    Ok(lo.abs().max(hi.abs()))
}

/// Thresholds for data and source size under which the Duhamel map is a
/// contraction of the ball of radius `radius`.
pub fn compute_thresholds(grid: GridSpec, radius: f64, probe_budget: usize) -> Result<ThresholdReport> {
    grid.validate()?;
    if !(radius > 0.0) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    if probe_budget == 0 {
        return Err(invalid("probe budget must be positive"));
    }
    let kappa = grid.kappa;
    let m = grid.sobolev_order_m;
    let (m1, m2, m3) = profile_maxima(kappa);
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let cube = CubicSource::new(&SourceSpec::Constant(1.0), grid)?;

    let mut embedding: f64 = 0.0;
    let mut product: f64 = 0.0;
    for _ in 0..probe_budget {
        let v = random_probe(grid, &mut rng);
        let w = random_probe(grid, &mut rng);
        embedding = embedding.max(sup_norm(&v)? / sobolev_norm(&v, m));
        let vw = multiply(&v, &w)?;
        product = product.max(sobolev_norm(&vw, m) / (sobolev_norm(&v, m) * sobolev_norm(&w, m)));
    }
    let mut cubic_bound: f64 = 0.0;
    let mut lipschitz: f64 = 0.0;
    for _ in 0..probe_budget {
        let r1 = radius * rng.gen_range(0.0f64..1.0).cbrt();
        let r2 = radius * rng.gen_range(0.0f64..1.0).cbrt();
        let v1 = scaled_to(&random_probe(grid, &mut rng), m + 1.0, r1);
        let v2 = scaled_to(&random_probe(grid, &mut rng), m + 1.0, r2);
        let c1 = cube.eval(0.0, &v1)?;
        let c2 = cube.eval(0.0, &v2)?;
        cubic_bound = cubic_bound.max(embedding * sobolev_norm(&c1, m));
        let diff = sobolev_norm(&v1.sub(&v2)?, m);
        if diff > 0.0 {
            lipschitz = lipschitz.max(product * sobolev_norm(&c1.sub(&c2)?, m) / diff);
        }
    }
    let r2 = radius * radius;
    let b1 = r2 / (4.0 * m1.max(1.0));
    let b2 = r2 / (4.0 * m2.max(1.0 / (4.0 * kappa * kappa)));
    let b3 = r2 / (2.0 * product * product * cubic_bound * cubic_bound) / (4.0 * m3.max(1.0 / (4.0 * kappa.powi(4))));
    let b4 = 0.5 / (m3.max(1.0 / (4.0 * kappa * kappa)) * lipschitz * lipschitz);
    let bounds = [b1.sqrt(), b2.sqrt(), b3.sqrt(), b4.sqrt()];
    let epsilon = bounds.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ThresholdReport {
        m1,
        m2,
        m3,
        embedding,
        product,
        cubic_bound,
        lipschitz,
        bounds,
        epsilon,
    })
}
