//! Numerical estimates of the polynomial trace and inverse inequality
//! constants
//!
//! ```text
//!   ‖z‖_{∂K} ≤ C_trace p h^{-1/2} ‖z‖_K,     ‖∇z‖_K ≤ C_inverse p² h^{-1} ‖z‖_K
//! ```
//!
//! The optimum over `P_p(K)` is a generalized eigenvalue problem; since the
//! modal basis is orthonormal the mass matrix is `det J · I` and the problem
//! reduces to a symmetric eigenvalue problem.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{edge_rule, triangle_rule, ReferenceBasis};
use crate::mesh::{norm, sub, ElementGeometry, Point};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InequalityConstants {
    pub degree: usize,
    /// Eigenvalue optimum.
    pub trace: f64,
    pub inverse: f64,
    /// Largest ratio over the random samples (never above the optimum).
    pub trace_sampled: f64,
    pub inverse_sampled: f64,
}

/// Trace-mass and stiffness matrices of the physical basis on one triangle.
pub struct InequalityEstimator {
    p: usize,
    n: usize,
    det: f64,
    h: f64,
    trace_mass: Vec<f64>,
    stiffness: Vec<f64>,
}

impl InequalityEstimator {
    pub fn new(p: usize, vertices: [Point; 3]) -> Result<Self> {
        let basis = ReferenceBasis::new(p)?;
        let geom = ElementGeometry::new(vertices)?;
        let n = basis.dim();
        let mut trace_mass = vec![0.0; n * n];
        let mut stiffness = vec![0.0; n * n];

        let mut v = vec![0.0; n];
        let er = edge_rule(2 * p + 2);
        for l in 0..3 {
            let (a, b) = (vertices[l], vertices[(l + 1) % 3]);
            let len = norm(sub(b, a));
            for (t, w) in er.iter() {
                let x = [a[0] + t[0] * (b[0] - a[0]), a[1] + t[0] * (b[1] - a[1])];
                basis.eval_point(geom.to_reference(x), (0, 0), &mut v)?;
                accumulate(&mut trace_mass, w * len, &v, &v);
            }
        }

        let tr = triangle_rule(2 * p + 2);
        let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
        let m = geom.inverse;
        for (xi, w) in tr.iter() {
            basis.eval_point(xi, (1, 0), &mut gx)?;
            basis.eval_point(xi, (0, 1), &mut gy)?;
            // ∇_x = J⁻ᵀ ∇_ξ
            let px: Vec<f64> = (0..n).map(|i| m[0][0] * gx[i] + m[1][0] * gy[i]).collect();
            let py: Vec<f64> = (0..n).map(|i| m[0][1] * gx[i] + m[1][1] * gy[i]).collect();
            accumulate(&mut stiffness, w * geom.det, &px, &px);
            accumulate(&mut stiffness, w * geom.det, &py, &py);
        }
        Ok(Self { p, n, det: geom.det, h: geom.diameter, trace_mass, stiffness })
    }

    fn quadratic(&self, a: &[f64], z: &[f64]) -> f64 {
        (0..self.n).map(|i| z[i] * (0..self.n).map(|j| a[i * self.n + j] * z[j]).sum::<f64>()).sum()
    }

    /// `‖z‖_{∂K} h^{1/2} / (p ‖z‖_K)` for modal coefficients `z`.
    pub fn trace_ratio(&self, z: &[f64]) -> f64 {
        let l2 = self.det * z.iter().map(|c| c * c).sum::<f64>();
        (self.quadratic(&self.trace_mass, z) / l2).sqrt() * self.h.sqrt() / self.p as f64
    }

    /// `‖∇z‖_K h / (p² ‖z‖_K)`.
    pub fn inverse_ratio(&self, z: &[f64]) -> f64 {
        let l2 = self.det * z.iter().map(|c| c * c).sum::<f64>();
        (self.quadratic(&self.stiffness, z) / l2).sqrt() * self.h / (self.p * self.p) as f64
    }

    fn max_eigenvalue(&self, a: &[f64]) -> Result<f64> {
        let mat = Mat::<f64>::from_fn(self.n, self.n, |i, j| a[i * self.n + j] / self.det);
        let ev = mat
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Config(format!("eigenvalue solve failed: {e:?}")))?;
        Ok(ev.into_iter().fold(0.0, f64::max))
    }

    pub fn constants(&self, samples: usize, seed: u64) -> Result<InequalityConstants> {
        let p = self.p as f64;
        let trace = self.max_eigenvalue(&self.trace_mass)?.sqrt() * self.h.sqrt() / p;
        let inverse = self.max_eigenvalue(&self.stiffness)?.sqrt() * self.h / (p * p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut ts, mut is) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let z: Vec<f64> = (0..self.n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ts = ts.max(self.trace_ratio(&z));
            is = is.max(self.inverse_ratio(&z));
        }
        Ok(InequalityConstants { degree: self.p, trace, inverse, trace_sampled: ts, inverse_sampled: is })
    }
}

fn accumulate(a: &mut [f64], w: f64, u: &[f64], v: &[f64]) {
    let n = u.len();
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] += w * u[i] * v[j];
        }
    }
}

/// Estimates the trace and inverse inequality constants of `P_p(K)`.
pub fn estimate_inequality_constants(p: usize, vertices: [Point; 3], samples: usize, seed: u64) -> Result<InequalityConstants> {
    if samples < 100 {
        return Err(Error::Config(format!("need at least 100 samples, got {samples}")));
    }
    InequalityEstimator::new(p, vertices)?.constants(samples, seed)
}
