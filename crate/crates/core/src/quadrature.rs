//! Gauss–Legendre rules and composite grids.
//!
//! Radial integrals elsewhere in the crate are taken in `t = −ln r`, where a
//! uniform composite rule on a symmetric span `(−T, T)` is the natural choice.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[−1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(z) and P_{n−1}(z) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre grid on `t_span = (a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub t_span: (f64, f64),
    pub panels: usize,
    pub order: usize,
}

impl QuadratureGrid {
    /// `panels` equal panels on `[a, b]`, each with an `order`-point rule.
    pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Self {
        assert!(panels >= 1 && b > a);
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for k in 0..panels {
            let lo = a + k as f64 * h;
            let mid = lo + 0.5 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        Self { nodes, weights, t_span: (a, b), panels, order }
    }

    /// Symmetric span `(−T, T)`, the layout used for log-radius integrals.
    pub fn symmetric(half_width: f64, panels: usize, order: usize) -> Self {
        Self::composite(-half_width, half_width, panels, order)
    }

    /// Default log-radius grid: `T = 40`, 160 panels of 16 points.
    pub fn default_log_radius() -> Self {
        Self::symmetric(40.0, 160, 16)
    }

    /// The refinement used for self-checks: span widened by 5, nodes doubled.
    pub fn refined(&self) -> Self {
        let (a, b) = self.t_span;
        Self::composite(a - 5.0, b + 5.0, 2 * self.panels, self.order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}
