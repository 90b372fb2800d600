//! Gauss–Legendre rules and small interpolation helpers.

use std::f64::consts::PI;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Splits `[a, b]` into the fewest equal panels no wider than `max_width`.
pub fn panels(a: f64, b: f64, max_width: f64) -> impl Iterator<Item = (f64, f64)> {
    let len = b - a;
    let count = if len <= 0.0 {
        0
    } else {
        ((len / max_width).ceil() as usize).max(1)
    };
    let h = if count > 0 { len / count as f64 } else { 0.0 };
    (0..count).map(move |i| {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == count { b } else { lo + h };
        (lo, hi)
    })
}

/// Cubic Lagrange basis on nodes `0, 1, 2, 3` evaluated at `s` (in node units).
pub fn lagrange4(s: f64) -> [f64; 4] {
    [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ]
}

/// First node of the 4-point stencil used for interval `[j, j+1]` out of `count` nodes.
pub fn stencil_start(j: usize, count: usize) -> usize {
    debug_assert!(count >= 4);
    j.saturating_sub(1).min(count - 4)
}

/// Cubic interpolation of uniformly spaced samples at fractional index `pos`.
pub fn cubic_weights(pos: f64, count: usize) -> (usize, [f64; 4]) {
    let j = (pos.floor().max(0.0) as usize).min(count - 2);
    let start = stencil_start(j, count);
    (start, lagrange4(pos - start as f64))
}
