//! Independent reference tools for tests: an adaptive Runge–Kutta–Fehlberg
//! 4(5) integrator and seeded random band-limited fields.

use nordstrom_core::spectral::{GridSpec, SpectralField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const A: [[f64; 5]; 6] = [
    [0.0; 5],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const C: [f64; 6] = [0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5];
const B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];

/// Integrates `y' = f(t, y)` from `t0` and returns the state at each of `outputs` (ascending).
pub fn rkf45(f: impl Fn(f64, &[f64]) -> Vec<f64>, t0: f64, y0: &[f64], outputs: &[f64], tol: f64) -> Vec<Vec<f64>> {
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h: f64 = 1e-4;
    let mut out = Vec::new();
    for &target in outputs {
        while t < target {
            let step = h.min(target - t);
            let mut k: Vec<Vec<f64>> = Vec::with_capacity(6);
            for s in 0..6 {
                let ys: Vec<f64> = (0..n)
                    .map(|i| y[i] + step * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
                    .collect();
                k.push(f(t + C[s] * step, &ys));
            }
            let mut err: f64 = 0.0;
            let mut y5 = y.clone();
            for i in 0..n {
                let d5: f64 = (0..6).map(|s| B5[s] * k[s][i]).sum();
                let d4: f64 = (0..6).map(|s| B4[s] * k[s][i]).sum();
                y5[i] += step * d5;
                err = err.max((step * (d5 - d4)).abs() / (tol * (1.0 + y[i].abs())));
            }
            if err <= 1.0 {
                t += step;
                y = y5;
            }
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.84 * err.powf(-0.25)).clamp(0.1, 4.0)
            };
            if step == h || err > 1.0 {
                h = step * factor;
            }
            assert!(h > 1e-15, "oracle step size collapsed at t = {t}");
        }
        out.push(y.clone());
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real field with modes `|k_i| <= band` and amplitudes decaying like `|k|^-decay`.
pub fn random_field(grid: GridSpec, band: i64, decay: f64, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    let n = grid.n_per_dim as i64;
    let band = band.min(n / 2 - 1);
    for a in -band..=band {
        for b in -band..=band {
            for c in -band..=band {
                let idx = grid.index_of(nordstrom_core::spectral::Wavevector([a, b, c])).unwrap();
                let mirror = grid.mirror(idx);
                if mirror < idx {
                    continue;
                }
                let k2 = (a * a + b * b + c * c) as f64;
                let amp = (1.0 + k2).powf(-decay / 2.0);
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
                if mirror == idx {
                    f.coeffs[idx] = Complex64::new(z.re, 0.0);
                } else {
                    f.coeffs[idx] = z;
                    f.coeffs[mirror] = z.conj();
                }
            }
        }
    }
    f
}
