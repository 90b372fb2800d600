//! Fourier representation of periodic fields on the 3-torus `[0, 2pi)^3`.
//!
//! Coefficients follow `f(x) = sum_k c_k exp(i k.x)` with `c_k` the mean of
//! `f exp(-i k.x)`. They are stored in DFT order on an `n^3` cube; index
//! `n/2` along an axis is the Nyquist bin and stands for `+-n/2` split evenly.

mod fft;
mod source;

pub use source::{eval_cubic_source, CubicSource, Envelope, SourceSpec};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
pub(crate) use fft::Fft3;

/// Largest tolerated `|c_{-k} - conj(c_k)|`, relative to `max(1, max |c|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Resolution and physical parameters shared by all fields of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_per_dim: usize,
    pub sobolev_order_m: f64,
    pub kappa: f64,
}

impl GridSpec {
    pub fn new(n_per_dim: usize, sobolev_order_m: f64, kappa: f64) -> Result<Self> {
        let grid = Self {
            n_per_dim,
            sobolev_order_m,
            kappa,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_per_dim < 4 || !self.n_per_dim.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_per_dim must be even and at least 4, got {}",
                self.n_per_dim
            )));
        }
        if !(self.sobolev_order_m.is_finite() && self.sobolev_order_m >= 0.0) {
            return Err(Error::InvalidGrid(format!(
                "sobolev order must be a finite non-negative number, got {}",
                self.sobolev_order_m
            )));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::Unsupported(format!(
                "kappa must lie in (0, 1), got {}",
                self.kappa
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_per_dim.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nyquist(&self) -> usize {
        self.n_per_dim / 2
    }

    /// Signed wavenumber of a DFT index; the Nyquist bin reports `+n/2`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n_per_dim;
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn split(&self, idx: usize) -> [usize; 3] {
        let n = self.n_per_dim;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn wavevector(&self, idx: usize) -> Wavevector {
        let [a, b, c] = self.split(idx);
        Wavevector([self.wavenumber(a), self.wavenumber(b), self.wavenumber(c)])
    }

    pub fn k2(&self, idx: usize) -> f64 {
        self.wavevector(idx).norm2() as f64
    }

    /// Storage index of a wavevector strictly inside the Nyquist band.
    pub fn index_of(&self, k: Wavevector) -> Option<usize> {
        let n = self.n_per_dim as i64;
        let mut idx = 0usize;
        for &ki in &k.0 {
            if ki.abs() >= n / 2 {
                return None;
            }
            idx = idx * n as usize + ki.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Index of `-k` for the entry at `idx`.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n_per_dim;
        let [a, b, c] = self.split(idx);
        let m = |i: usize| (n - i) % n;
        (m(a) * n + m(b)) * n + m(c)
    }

    /// Collocation point of a flat grid index.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = 2.0 * PI / self.n_per_dim as f64;
        let [a, b, c] = self.split(idx);
        [a as f64 * h, b as f64 * h, c as f64 * h]
    }

    pub fn with_n(&self, n_per_dim: usize) -> Result<Self> {
        Self::new(n_per_dim, self.sobolev_order_m, self.kappa)
    }

    /// `|k|^(2 m)` for every stored wavevector; the zero entry holds 1.
    pub fn sobolev_weights(&self, m: f64) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let k2 = self.k2(idx);
                if idx == 0 {
                    1.0
                } else if m.fract() == 0.0 && m.abs() < 64.0 {
                    k2.powi(m as i32)
                } else {
                    k2.powf(m)
                }
            })
            .collect()
    }
}

/// Integer wavevector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Wavevector(pub [i64; 3]);

impl Wavevector {
    pub fn norm2(&self) -> i64 {
        self.0.iter().map(|k| k * k).sum()
    }

    pub fn neg(&self) -> Self {
        Wavevector([-self.0[0], -self.0[1], -self.0[2]])
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|k| k.abs()).max().unwrap_or(0)
    }
}

/// One Fourier term, the serialized form of trig-polynomial coefficient lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: [i64; 3],
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl Mode {
    pub fn new(k: [i64; 3], re: f64, im: f64) -> Self {
        Self { k, re, im }
    }

    /// The pair of terms making up `amp * cos(k.x)`.
    pub fn cosine(k: [i64; 3], amp: f64) -> [Mode; 2] {
        let w = Wavevector(k).neg().0;
        [Mode::new(k, 0.5 * amp, 0.0), Mode::new(w, 0.5 * amp, 0.0)]
    }

    /// The pair of terms making up `amp * sin(k.x)`.
    pub fn sine(k: [i64; 3], amp: f64) -> [Mode; 2] {
        let w = Wavevector(k).neg().0;
        [Mode::new(k, 0.0, -0.5 * amp), Mode::new(w, 0.0, 0.5 * amp)]
    }

    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Fourier coefficients of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: GridSpec,
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    /// Builds a field from a coefficient list; repeated wavevectors add up.
    pub fn from_modes(grid: GridSpec, modes: &[Mode]) -> Result<Self> {
        let mut f = Self::zeros(grid);
        for mode in modes {
            let idx = grid.index_of(Wavevector(mode.k)).ok_or_else(|| {
                invalid(format!(
                    "wavevector {:?} lies outside the band |k_i| < {} of a {}^3 grid",
                    mode.k,
                    grid.nyquist(),
                    grid.n_per_dim
                ))
            })?;
            f.coeffs[idx] += mode.coeff();
        }
        f.check_symmetry()?;
        Ok(f)
    }

    /// Samples `f` on the collocation grid and transforms.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        forward_transform(grid, &values).expect("length matches grid")
    }

    pub fn n(&self) -> usize {
        self.grid.n_per_dim
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn coeff(&self, k: Wavevector) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn ensure_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::GridMismatch(self.n(), other.n()));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b * s).collect(),
        })
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest `|c_{-k} - conj(c_k)|` over the cube.
    pub fn symmetry_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| (self.coeffs[self.grid.mirror(i)] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn check_symmetry(&self) -> Result<()> {
        let defect = self.symmetry_defect();
        let scale = self.max_abs_coeff().max(1.0);
        if defect.is_nan() || defect > SYMMETRY_TOL * scale {
            return Err(Error::CorruptField(defect));
        }
        Ok(())
    }

    /// Grid values of the field.
    pub fn values(&self) -> Result<Vec<f64>> {
        inverse_transform(self)
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn eval_at(&self, x: [f64; 3]) -> f64 {
        let n = self.n();
        let half = n / 2;
        let mut acc = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let axes = self.grid.split(idx);
            let mut phase = Complex64::new(1.0, 0.0);
            for d in 0..3 {
                if axes[d] == half {
                    phase *= (half as f64 * x[d]).cos();
                } else {
                    let k = self.grid.wavenumber(axes[d]) as f64;
                    phase *= Complex64::from_polar(1.0, k * x[d]);
                }
            }
            acc += (c * phase).re;
        }
        acc
    }

    /// Pointwise minimum and maximum over the collocation grid.
    pub fn grid_extrema(&self) -> Result<(f64, f64)> {
        let v = self.values()?;
        Ok(v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        }))
    }
}

/// Solution snapshot `(u, du/dt)` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub time: f64,
    pub u: SpectralField,
    pub u_t: SpectralField,
}

impl WaveState {
    pub fn new(time: f64, u: SpectralField, u_t: SpectralField) -> Result<Self> {
        u.ensure_same_grid(&u_t)?;
        Ok(Self { time, u, u_t })
    }

    pub fn grid(&self) -> GridSpec {
        self.u.grid
    }
}

/// Normalized forward transform of real grid samples.
pub fn forward_transform(grid: GridSpec, values: &[f64]) -> Result<SpectralField> {
    if values.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft3::get(grid.n_per_dim).forward(&mut data);
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    Ok(SpectralField { grid, coeffs: data })
}

/// Grid values of a field; rejects coefficients that are not conjugate-symmetric.
pub fn inverse_transform(field: &SpectralField) -> Result<Vec<f64>> {
    field.check_symmetry()?;
    let mut data = field.coeffs.clone();
    Fft3::get(field.n()).inverse(&mut data);
    Ok(data.into_iter().map(|c| c.re).collect())
}

/// `sqrt(|c_0|^2 + sum_{k != 0} |k|^(2m) |c_k|^2)`.
pub fn sobolev_norm(field: &SpectralField, m: f64) -> f64 {
    (field.coeffs[0].norm_sqr() + homogeneous_norm_sq(field, m)).sqrt()
}

/// Same as [`sobolev_norm`] without the mean.
pub fn homogeneous_norm(field: &SpectralField, m: f64) -> f64 {
    homogeneous_norm_sq(field, m).sqrt()
}

/// Share of the `L^2` mass held by modes with some `|k_i| >= n/3`; large values mean the grid no longer resolves the field.
pub fn tail_fraction(field: &SpectralField) -> f64 {
    let grid = field.grid;
    let cut = grid.n_per_dim as i64;
    let (tail, total) = field
        .coeffs
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(tail, total), (idx, c)| {
            let a = c.norm_sqr();
            let outer = 3 * grid.wavevector(idx).max_abs() >= cut;
            (if outer { tail + a } else { tail }, total + a)
        });
    if total > 0.0 {
        (tail / total).sqrt()
    } else {
        0.0
    }
}

pub(crate) fn homogeneous_norm_sq(field: &SpectralField, m: f64) -> f64 {
    let grid = field.grid;
    let integer = m.fract() == 0.0 && m.abs() < 64.0;
    field
        .coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(idx, c)| {
            let k2 = grid.k2(idx);
            let w = if integer { k2.powi(m as i32) } else { k2.powf(m) };
            w * c.norm_sqr()
        })
        .sum()
}

/// `<a, b>_m = a_0 b_0 + sum_{k != 0} |k|^(2m) Re(a_k conj b_k)`.
pub fn inner_product_m(a: &SpectralField, b: &SpectralField, m: f64) -> Result<f64> {
    a.ensure_same_grid(b)?;
    let weights = a.grid.sobolev_weights(m);
    Ok(a.coeffs
        .iter()
        .zip(&b.coeffs)
        .zip(&weights)
        .map(|((x, y), w)| w * (x * y.conj()).re)
        .sum())
}

/// Splits off the mean: returns `(mean, field - mean)`.
pub fn project_mean(field: &SpectralField) -> (f64, SpectralField) {
    let mut rest = field.clone();
    let mean = rest.coeffs[0].re;
    rest.coeffs[0] = Complex64::default();
    (mean, rest)
}

/// Spectral gradient; odd derivatives of Nyquist bins are zeroed to keep fields real.
pub fn gradient(field: &SpectralField) -> [SpectralField; 3] {
    let grid = field.grid;
    let half = grid.nyquist();
    std::array::from_fn(|d| {
        let coeffs = field
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let a = grid.split(idx)[d];
                if a == half {
                    Complex64::default()
                } else {
                    c * Complex64::new(0.0, grid.wavenumber(a) as f64)
                }
            })
            .collect();
        SpectralField { grid, coeffs }
    })
}

pub fn laplacian(field: &SpectralField) -> SpectralField {
    let grid = field.grid;
    SpectralField {
        grid,
        coeffs: field
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| c * -grid.k2(idx))
            .collect(),
    }
}

/// Dealiased product of two fields, projected back onto their band.
pub fn multiply(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    a.ensure_same_grid(b)?;
    a.check_symmetry()?;
    b.check_symmetry()?;
    let big = 2 * a.n();
    let fft = Fft3::get(big);
    let mut x = pad(a, big);
    let mut y = pad(b, big);
    fft.inverse(&mut x);
    fft.inverse(&mut y);
    let scale = 1.0 / (big * big * big) as f64;
    for (p, q) in x.iter_mut().zip(&y) {
        *p = Complex64::new(p.re * q.re * scale, 0.0);
    }
    fft.forward(&mut x);
    Ok(truncate(&x, big, a.grid))
}

/// Zero-pads DFT-ordered coefficients from `n^3` to `big^3`, splitting Nyquist bins.
pub(crate) fn pad(field: &SpectralField, big: usize) -> Vec<Complex64> {
    let n = field.n();
    let half = n / 2;
    let mut out = vec![Complex64::default(); big * big * big];
    let targets = |i: usize| -> ([usize; 2], usize, f64) {
        if i < half {
            ([i, 0], 1, 1.0)
        } else if i > half {
            ([big - (n - i), 0], 1, 1.0)
        } else {
            ([half, big - half], 2, 0.5)
        }
    };
    for (idx, c) in field.coeffs.iter().enumerate() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let [a, b, d] = field.grid.split(idx);
        let (ta, na, wa) = targets(a);
        let (tb, nb, wb) = targets(b);
        let (td, nd, wd) = targets(d);
        let w = wa * wb * wd;
        for &x in &ta[..na] {
            for &y in &tb[..nb] {
                for &z in &td[..nd] {
                    out[(x * big + y) * big + z] += c * w;
                }
            }
        }
    }
    out
}

/// Inverse of [`pad`]: keeps the `n`-band, folding `+-n/2` into the Nyquist bin.
pub(crate) fn truncate(padded: &[Complex64], big: usize, grid: GridSpec) -> SpectralField {
    let n = grid.n_per_dim;
    let half = n / 2;
    let source = |i: usize| -> ([usize; 2], usize) {
        if i < half {
            ([i, 0], 1)
        } else if i > half {
            ([big - (n - i), 0], 1)
        } else {
            ([half, big - half], 2)
        }
    };
    let mut out = SpectralField::zeros(grid);
    for (idx, slot) in out.coeffs.iter_mut().enumerate() {
        let [a, b, d] = grid.split(idx);
        let (sa, na) = source(a);
        let (sb, nb) = source(b);
        let (sd, nd) = source(d);
        for &x in &sa[..na] {
            for &y in &sb[..nb] {
                for &z in &sd[..nd] {
                    *slot += padded[(x * big + y) * big + z];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, 1.0, 0.5).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(3, 1.0, 0.5).is_err());
        assert!(GridSpec::new(2, 1.0, 0.5).is_err());
        assert!(matches!(GridSpec::new(8, 1.0, 1.0), Err(Error::Unsupported(_))));
        assert!(GridSpec::new(6, 0.0, 0.1).is_ok());
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let g = grid(8);
        let f = SpectralField::from_fn(g, |x| x[0].cos());
        assert!((f.coeff(Wavevector([1, 0, 0])).unwrap().re - 0.5).abs() < 1e-15);
        assert!((f.coeff(Wavevector([-1, 0, 0])).unwrap().re - 0.5).abs() < 1e-15);
        let total: f64 = f.coeffs.iter().map(|c| c.norm()).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn round_trip_and_point_evaluation() {
        let g = grid(8);
        let f = |x: [f64; 3]| 0.3 + (x[0] + 2.0 * x[2]).sin() - 0.2 * (x[1] - x[2]).cos();
        let field = SpectralField::from_fn(g, f);
        let back = field.values().unwrap();
        for (i, v) in back.iter().enumerate() {
            assert!((v - f(g.point(i))).abs() < 1e-13);
        }
        let p = [0.123, 4.5, 2.2];
        assert!((field.eval_at(p) - f(p)).abs() < 1e-13);
    }

    #[test]
    fn broken_symmetry_is_rejected() {
        let mut f = SpectralField::zeros(grid(4));
        f.coeffs[1] = Complex64::new(0.0, 1.0);
        assert!(matches!(inverse_transform(&f), Err(Error::CorruptField(_))));
    }

    #[test]
    fn modes_outside_band_are_rejected() {
        let g = grid(4);
        assert!(SpectralField::from_modes(g, &Mode::cosine([2, 0, 0], 1.0)).is_err());
        assert!(SpectralField::from_modes(g, &[Mode::new([1, 0, 0], 1.0, 0.0)]).is_err());
        assert!(SpectralField::from_modes(g, &Mode::sine([1, 1, 0], 1.0)).is_ok());
    }

    #[test]
    fn pad_truncate_round_trip_with_nyquist() {
        let g = grid(4);
        let f = SpectralField::from_fn(g, |x| (2.0 * x[0]).cos() + (x[1] + 2.0 * x[2]).sin());
        let big = 8;
        let p = pad(&f, big);
        let back = truncate(&p, big, g);
        for (a, b) in f.coeffs.iter().zip(&back.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
        // the padded field is still real
        let mut data = p.clone();
        Fft3::get(big).inverse(&mut data);
        assert!(data.iter().all(|c| c.im.abs() < 1e-13));
    }

    #[test]
    fn mean_projection() {
        let g = grid(6);
        let f = SpectralField::from_fn(g, |x| 2.0 + x[1].sin());
        let (mean, rest) = project_mean(&f);
        assert!((mean - 2.0).abs() < 1e-14);
        assert!(rest.mean().abs() < 1e-16);
        assert!((homogeneous_norm(&f, 1.0) - sobolev_norm(&rest, 1.0)).abs() < 1e-14);
    }
}
