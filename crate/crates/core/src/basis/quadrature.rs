use serde::Serialize;

use crate::mesh::Point;

/// Points and weights on the unit interval (`points[i][1]` unused) or on the
/// reference triangle `{x, y ≥ 0, x + y ≤ 1}`.
#[derive(Debug, Clone, Serialize)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomials up to this total degree are integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
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

/// Gauss rule on `[0, 1]` exact to degree `exactness`.
pub fn edge_rule(exactness: usize) -> QuadratureRule {
    let n = exactness / 2 + 1;
    let (x, w) = gauss_legendre(n);
    QuadratureRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0), 0.0]).collect(),
        weights: w.iter().map(|&wi| 0.5 * wi).collect(),
        exactness: 2 * n - 1,
    }
}

/// Collapsed (Duffy) Gauss product rule on the reference triangle exact to
/// degree `exactness`. The collapse adds one degree in the first direction.
pub fn triangle_rule(exactness: usize) -> QuadratureRule {
    let n = (exactness + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&su, &wu) in x.iter().zip(&w) {
        let u = 0.5 * (su + 1.0);
        for (&sv, &wv) in x.iter().zip(&w) {
            let v = 0.5 * (sv + 1.0);
            points.push([u, (1.0 - u) * v]);
            weights.push(0.25 * wu * wv * (1.0 - u));
        }
    }
    QuadratureRule { points, weights, exactness: 2 * n - 2 }
}
