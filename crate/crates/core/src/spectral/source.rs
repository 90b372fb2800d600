//! Source coefficients `a(t, x)` and the dealiased cubic term `a (1 + u)^3`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{pad, truncate, Fft3, GridSpec, Mode, SpectralField};
use crate::error::{invalid, Result};

/// Time profile of a separable source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Constant(f64),
    /// `amplitude * exp(rate * t)`
    Exponential {
        amplitude: f64,
        rate: f64,
    },
    /// Coefficients in increasing degree.
    Polynomial(Vec<f64>),
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(c) => *c,
            Envelope::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
            Envelope::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &x| acc * t + x),
        }
    }

    /// Smallest and largest value on `[0, t_end]`, sampled.
    pub fn range(&self, t_end: f64) -> (f64, f64) {
        let samples = 2001;
        (0..samples)
            .map(|i| self.at(t_end * i as f64 / (samples - 1) as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// The coefficient `a(t, x)` multiplying the cubic term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    Constant(f64),
    /// `envelope(t) * A(x)` with `A` a real trigonometric polynomial.
    Separable {
        envelope: Envelope,
        modes: Vec<Mode>,
    },
}

impl SourceSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            SourceSpec::Constant(c) => *c == 0.0,
            SourceSpec::Separable { envelope, modes } => {
                modes.iter().all(|m| m.re == 0.0 && m.im == 0.0)
                    || matches!(envelope, Envelope::Constant(c) if *c == 0.0)
            }
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            SourceSpec::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// Largest `|k_i|` among the spatial modes.
    pub fn bandwidth(&self) -> i64 {
        match self {
            SourceSpec::Constant(_) => 0,
            SourceSpec::Separable { modes, .. } => modes
                .iter()
                .map(|m| m.k.iter().map(|k| k.abs()).max().unwrap_or(0))
                .max()
                .unwrap_or(0),
        }
    }

    pub fn envelope(&self, t: f64) -> f64 {
        match self {
            SourceSpec::Constant(c) => *c,
            SourceSpec::Separable { envelope, .. } => envelope.at(t),
        }
    }

    /// Spatial factor `A` on the given grid (the constant itself for constant sources).
    pub fn spatial_field(&self, grid: GridSpec) -> Result<SpectralField> {
        match self {
            SourceSpec::Constant(_) => Ok(SpectralField::constant(grid, 1.0)),
            SourceSpec::Separable { modes, .. } => SpectralField::from_modes(grid, modes),
        }
    }

    pub fn validate(&self, grid: GridSpec) -> Result<()> {
        let ok = match self {
            SourceSpec::Constant(c) => c.is_finite(),
            SourceSpec::Separable { envelope, modes } => {
                self.spatial_field(grid)?;
                let env_ok = match envelope {
                    Envelope::Constant(c) => c.is_finite(),
                    Envelope::Exponential { amplitude, rate } => amplitude.is_finite() && rate.is_finite(),
                    Envelope::Polynomial(c) => c.iter().all(|x| x.is_finite()),
                };
                env_ok && modes.iter().all(|m| m.re.is_finite() && m.im.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid("source has non-finite parameters"))
        }
    }

    pub fn value(&self, t: f64, x: [f64; 3], grid: GridSpec) -> Result<f64> {
        Ok(self.envelope(t) * self.spatial_field(grid)?.eval_at(x))
    }

    /// Lower bound of `a` over `[0, t_end]` and the fine grid of `grid`.
    pub fn lower_bound(&self, grid: GridSpec, t_end: f64) -> Result<f64> {
        Ok(self.extremes(grid, t_end)?.0)
    }

    /// `(min, max)` of `a` over `[0, t_end]` and the fine grid of `grid`.
    pub fn extremes(&self, grid: GridSpec, t_end: f64) -> Result<(f64, f64)> {
        match self {
            SourceSpec::Constant(c) => Ok((*c, *c)),
            SourceSpec::Separable { envelope, .. } => {
                let fine = grid.with_n(2 * grid.n_per_dim)?;
                let (a_lo, a_hi) = self.spatial_field(grid)?.grid_extrema_on(fine)?;
                let (s_lo, s_hi) = envelope.range(t_end);
                let corners = [s_lo * a_lo, s_lo * a_hi, s_hi * a_lo, s_hi * a_hi];
                Ok(corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }))
            }
        }
    }

    /// `sup_t ||a(t)||_{H^m}` over `[0, t_end]`, sampled in time.
    pub fn sup_sobolev_norm(&self, grid: GridSpec, m: f64, t_end: f64) -> Result<f64> {
        let spatial = super::sobolev_norm(&self.spatial_field(grid)?, m);
        let (lo, hi) = match self {
            SourceSpec::Constant(c) => (*c, *c),
            SourceSpec::Separable { envelope, .. } => envelope.range(t_end),
        };
        Ok(lo.abs().max(hi.abs()) * spatial)
    }
}

impl SpectralField {
    /// Extremes of the trigonometric interpolant sampled on a finer grid.
    pub fn grid_extrema_on(&self, fine: GridSpec) -> Result<(f64, f64)> {
        self.check_symmetry()?;
        let big = fine.n_per_dim.max(self.n());
        let mut data = pad(self, big);
        Fft3::get(big).inverse(&mut data);
        Ok(data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.re), hi.max(c.re))
        }))
    }
}

/// Result of one dealiased evaluation of `a (1 + u)^3`.
#[derive(Debug, Clone)]
pub struct CubicEval {
    pub source: SpectralField,
    /// Extremes of `1 + u` on the padded grid.
    pub min_one_plus_u: f64,
    pub max_one_plus_u: f64,
}

/// Evaluator of `P[a(t) (1 + u)^3]` on a zero-padded grid large enough that
/// the product has no aliases inside the retained band.
#[derive(Debug, Clone)]
pub struct CubicSource {
    grid: GridSpec,
    big: usize,
    source: SourceSpec,
    spatial: Option<Vec<f64>>,
}

impl CubicSource {
    pub fn new(source: &SourceSpec, grid: GridSpec) -> Result<Self> {
        source.validate(grid)?;
        let extra = source.bandwidth() as usize;
        let big = 2 * grid.n_per_dim + extra + extra % 2;
        let spatial = match source {
            SourceSpec::Constant(_) => None,
            SourceSpec::Separable { .. } => {
                let a = source.spatial_field(grid)?;
                let mut data = pad(&a, big);
                Fft3::get(big).inverse(&mut data);
                Some(data.into_iter().map(|c| c.re).collect())
            }
        };
        Ok(Self {
            grid,
            big,
            source: source.clone(),
            spatial,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.source
    }

    pub fn padded_n(&self) -> usize {
        self.big
    }

    pub fn eval(&self, t: f64, u: &SpectralField) -> Result<SpectralField> {
        Ok(self.eval_detailed(t, u)?.source)
    }

    pub fn eval_detailed(&self, t: f64, u: &SpectralField) -> Result<CubicEval> {
        if u.n() != self.grid.n_per_dim {
            return Err(crate::Error::GridMismatch(u.n(), self.grid.n_per_dim));
        }
        u.check_symmetry()?;
        let big = self.big;
        let fft = Fft3::get(big);
        let mut data = pad(u, big);
        fft.inverse(&mut data);
        let env = self.source.envelope(t);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, c) in data.iter_mut().enumerate() {
            let w = 1.0 + c.re;
            lo = lo.min(w);
            hi = hi.max(w);
            let a = match &self.spatial {
                None => env,
                Some(s) => env * s[i],
            };
            *c = Complex64::new(a * w * w * w, 0.0);
        }
        fft.forward(&mut data);
        let scale = 1.0 / (big * big * big) as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        Ok(CubicEval {
            source: truncate(&data, big, self.grid),
            min_one_plus_u: lo,
            max_one_plus_u: hi,
        })
    }
}

/// Band-limited projection of `a(t, x) (1 + u)^3`.
pub fn eval_cubic_source(a: &SourceSpec, t: f64, u: &SpectralField) -> Result<SpectralField> {
    CubicSource::new(a, u.grid)?.eval(t, u)
}
