//! Cached unnormalized 3-D FFTs on `n^3` cubes stored with the last axis fastest.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Fft3>>>> = OnceLock::new();

impl Fft3 {
    pub fn get(n: usize) -> Arc<Fft3> {
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                Arc::new(Fft3 {
                    n,
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            })
            .clone()
    }

    /// `out_k = sum_x in_x exp(-i k.x)`, no scaling.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, self.forward.as_ref());
    }

    /// `out_x = sum_k in_k exp(i k.x)`, no scaling.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, self.inverse.as_ref());
    }

    fn run(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n);
        let plane = n * n;
        // axes 2 and 1 inside each plane
        data.par_chunks_mut(plane).for_each(|p| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(p, &mut scratch);
            let mut line = vec![Complex64::default(); n];
            for i2 in 0..n {
                for i1 in 0..n {
                    line[i1] = p[i1 * n + i2];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for i1 in 0..n {
                    p[i1 * n + i2] = line[i1];
                }
            }
        });
        // axis 0 through a transposed copy
        let mut t = vec![Complex64::default(); data.len()];
        for i0 in 0..n {
            for r in 0..plane {
                t[r * n + i0] = data[i0 * plane + r];
            }
        }
        t.par_chunks_mut(n * 64.min(plane)).for_each(|c| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(c, &mut scratch);
        });
        for i0 in 0..n {
            for r in 0..plane {
                data[i0 * plane + r] = t[r * n + i0];
            }
        }
    }
}
