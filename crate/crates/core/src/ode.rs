//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    /// Steps smaller than `h_min * max(1, |t|)` count as a collapse.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-14,
            h_init: 1e-3,
            h_min: 1e-14,
            max_steps: 10_000_000,
        }
    }
}

/// Why [`Dopri::advance_to`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    Reached,
    /// The guard fired after an accepted step.
    Guard,
    StepCollapse,
    NonFinite,
    MaxSteps,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrator state for `y' = f(t, y)`.
pub struct Dopri<const N: usize, F> {
    f: F,
    pub t: f64,
    pub y: [f64; N],
    /// State before the last accepted step.
    pub prev: (f64, [f64; N]),
    h: f64,
    pub opts: OdeOptions,
    pub steps: usize,
}

impl<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]> Dopri<N, F> {
    pub fn new(f: F, t0: f64, y0: [f64; N], opts: OdeOptions) -> Self {
        Self {
            f,
            t: t0,
            y: y0,
            prev: (t0, y0),
            h: opts.h_init,
            opts,
            steps: 0,
        }
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// One embedded step from `(t, y)`; returns the 5th-order state and the scaled error.
    pub fn trial(&mut self, t: f64, y: &[f64; N], h: f64) -> ([f64; N], f64) {
        let mut k = [[0.0; N]; 7];
        for s in 0..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = (self.f)(t + C[s] * h, &ys);
        }
        let mut y5 = *y;
        let mut err: f64 = 0.0;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let scale = self.opts.atol + self.opts.rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        (y5, err)
    }

    /// Advances up to `t_target` without overshooting it.
    pub fn advance_to(&mut self, t_target: f64, mut guard: impl FnMut(f64, &[f64; N]) -> bool) -> Advance {
        while self.t < t_target {
            if self.steps >= self.opts.max_steps {
                return Advance::MaxSteps;
            }
            let remaining = t_target - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            let (y_new, err) = self.trial(self.t, &self.y.clone(), h);
            if err <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
                self.prev = (self.t, self.y);
                self.t = if last { t_target } else { self.t + h };
                self.y = y_new;
                self.steps += 1;
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last || grow < 1.0 {
                    self.h = h * grow;
                }
                if guard(self.t, &self.y) {
                    return Advance::Guard;
                }
            } else {
                let shrink = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                self.h = h * shrink;
                if self.h < self.opts.h_min * self.t.abs().max(1.0) {
                    return if y_new.iter().all(|v| v.is_finite()) {
                        Advance::StepCollapse
                    } else {
                        Advance::NonFinite
                    };
                }
            }
        }
        Advance::Reached
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let mut ode = Dopri::new(|_t, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], OdeOptions::default());
        assert_eq!(ode.advance_to(10.0, |_, _| false), Advance::Reached);
        assert_eq!(ode.t, 10.0);
        assert!((ode.y[0] - 10f64.cos()).abs() < 1e-10);
        assert!((ode.y[1] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn riccati_blow_up_collapses_or_trips_guard() {
        // y' = y^2, y(0) = 1 blows up at t = 1
        let mut ode = Dopri::new(|_t, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], OdeOptions::default());
        let r = ode.advance_to(2.0, |_, y| y[0] > 1e8);
        assert_eq!(r, Advance::Guard);
        assert!((ode.t - 1.0).abs() < 1e-6);
    }
}
