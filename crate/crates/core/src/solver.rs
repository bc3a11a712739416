//! Sparse direct solution of the complex system with a posteriori residual
//! checking and a few steps of iterative refinement.

use std::time::Instant;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, Par};
use num_complex::Complex64;
use serde::Serialize;

use crate::assembly::{ComplexSystem, DgSolution};
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENT: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// `‖Ax - b‖ / ‖b‖`, or `‖Ax‖` when `b = 0`.
    pub residual: f64,
    pub n_dofs: usize,
    pub nnz: usize,
    pub refinement_steps: usize,
    pub seconds: f64,
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(system: &ComplexSystem, x: &[Complex64]) -> Vec<Complex64> {
    system.matrix.mul_vec(x).iter().zip(&system.rhs).map(|(ax, b)| b - ax).collect()
}

/// Solves `A x = b` by sparse LU. Fails with [`Error::Solver`] if the
/// factorization breaks down or the relative residual exceeds `tol`.
pub fn solve(system: &ComplexSystem, tol: f64) -> Result<(DgSolution, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    faer::set_global_parallelism(Par::Seq);
    let start = Instant::now();
    let n = system.n_dofs();
    let a = &system.matrix;

    let triplets: Vec<Triplet<usize, usize, c64>> = a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, c64>::try_new_from_triplets(n, a.ncols(), &triplets)
        .map_err(|e| Error::Solver { msg: format!("matrix construction failed: {e:?}"), residual: f64::NAN })?;
    let lu = mat.sp_lu().map_err(|e| Error::Solver { msg: format!("sparse LU failed: {e:?}"), residual: f64::NAN })?;

    let b_norm = norm2(&system.rhs);
    let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut r = system.rhs.clone();
    let mut rel = norm2(&r) / scale;
    let mut steps = 0;
    while rel > 0.0 && steps <= MAX_REFINEMENT {
        let rhs = Mat::<c64>::from_fn(n, 1, |i, _| r[i]);
        let dx = lu.solve(&rhs);
        let candidate: Vec<Complex64> = (0..n).map(|i| x[i] + dx[(i, 0)]).collect();
        let r_new = residual(system, &candidate);
        let rel_new = norm2(&r_new) / scale;
        if !rel_new.is_finite() {
            return Err(Error::Solver { msg: "LU produced non-finite values: matrix is singular to working precision".into(), residual: rel_new });
        }
        if rel_new >= rel && steps > 0 {
            break;
        }
        x = candidate;
        r = r_new;
        rel = rel_new;
        steps += 1;
        if rel <= tol * 1e-3 {
            break;
        }
    }
    if rel > tol {
        return Err(Error::Solver { msg: format!("relative residual {rel:e} exceeds tolerance {tol:e}"), residual: rel });
    }
    let report = SolveReport {
        residual: rel,
        n_dofs: n,
        nnz: a.nnz(),
        refinement_steps: steps.saturating_sub(1),
        seconds: start.elapsed().as_secs_f64(),
    };
    let solution = DgSolution { coefficients: x, degree: system.degree, n_elements: system.n_elements, config: system.config.clone() };
    Ok((solution, report))
}
