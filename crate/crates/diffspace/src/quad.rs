//! Gauss-Legendre quadrature: 1-D node/weight tables and tensor-product rules
//! over axis-aligned boxes.

use crate::chains::CubeBox;

/// Nodes and weights of an `order`-point Gauss-Legendre rule on `[-1, 1]`.
///
/// Exact for polynomials of degree `2 * order - 1`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order;
        // Newton iteration from the Chebyshev initial guess; only the lower
        // half is computed, the rest follows by symmetry.
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre {
            order,
            nodes,
            weights,
        }
    }

    /// Integrate a scalar function over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
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

/// Tensor-product Gauss-Legendre rule mapped onto a box: one `order`-point
/// rule per axis, nodes affinely mapped to the axis bounds.
///
/// A degenerate axis (zero length) contributes weight zero, so integrals over
/// degenerate boxes vanish identically.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    line: GaussLegendre,
}

impl QuadratureRule {
    pub fn new(order: usize) -> Self {
        QuadratureRule {
            order,
            line: GaussLegendre::new(order),
        }
    }

    /// Visit every tensor node of the rule on `cube`, calling
    /// `f(point, weight)`. The weight includes the box volume scaling.
    pub fn for_each_node<F: FnMut(&[f64], f64)>(&self, cube: &CubeBox, mut f: F) {
        let p = cube.dim();
        if p == 0 {
            f(&[], 1.0);
            return;
        }
        let n = self.line.order;
        let mut idx = vec![0usize; p];
        let mut point = vec![0.0; p];
        loop {
            let mut w = 1.0;
            for (axis, &i) in idx.iter().enumerate() {
                let (lo, hi) = cube.bounds()[axis];
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (lo + hi);
                point[axis] = mid + half * self.line.nodes[i];
                w *= half * self.line.weights[i];
            }
            f(&point, w);
            // odometer increment
            let mut axis = 0;
            loop {
                idx[axis] += 1;
                if idx[axis] < n {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
                if axis == p {
                    return;
                }
            }
        }
    }
}
