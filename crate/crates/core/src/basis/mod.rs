//! Orthonormal modal basis of `P_p` on the reference triangle
//! `T̂ = {x, y ≥ 0, x + y ≤ 1}` and the quadrature rules used with it.

mod inequality;
mod quadrature;

use crate::mesh::Point;
use crate::{Error, Result};

pub use inequality::{estimate_inequality_constants, InequalityConstants, InequalityEstimator};
pub use quadrature::{edge_rule, gauss_legendre, triangle_rule, QuadratureRule};

pub const MAX_DEGREE: usize = 8;

/// Monomials are expanded about the centroid for conditioning. Both
/// `x^a y^b` and `(x - c)^a (y - c)^b` differ only by lower-degree terms, so
/// in graded order they span the same nested subspaces and Gram–Schmidt
/// produces the same orthonormal functions.
const CENTER: f64 = 1.0 / 3.0;

/// `n (n - 1) ⋯ (n - k + 1)`
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// Graded-lex exponents: degree 0, 1, …, p and within degree `n` the order
/// `x^n, x^{n-1} y, …, y^n`.
fn graded_lex(p: usize) -> Vec<(usize, usize)> {
    (0..=p).flat_map(|n| (0..=n).map(move |b| (n - b, b))).collect()
}

/// `(p + 1)(p + 2) / 2`
pub fn dimension(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBasis {
    degree: usize,
    exponents: Vec<(usize, usize)>,
    /// `coeffs[m * dim + i]` is the weight of monomial `m` in function `i`.
    coeffs: Vec<f64>,
}

impl ReferenceBasis {
    /// Orthonormalizes the graded-lex monomials in `L²(T̂)`. Cholesky QR is
    /// applied twice, which restores orthogonality lost to the conditioning
    /// of the monomial Gram matrix.
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::Config(format!("polynomial degree must be in 1..={MAX_DEGREE}, got {degree}")));
        }
        let exponents = graded_lex(degree);
        let n = exponents.len();
        let rule = triangle_rule(2 * degree);
        let raw: Vec<f64> = rule
            .points
            .iter()
            .flat_map(|&[x, y]| exponents.iter().map(move |&(a, b)| (x - CENTER).powi(a as i32) * (y - CENTER).powi(b as i32)))
            .collect();

        let mut coeffs = identity(n);
        for _ in 0..2 {
            // Values of the current functions at the quadrature points.
            let vals: Vec<f64> = raw.chunks(n).flat_map(|row| (0..n).map(|i| (0..n).map(|m| row[m] * coeffs[m * n + i]).sum::<f64>()).collect::<Vec<_>>()).collect();
            let mut gram = vec![0.0; n * n];
            for (row, &w) in vals.chunks(n).zip(&rule.weights) {
                for i in 0..n {
                    for j in 0..=i {
                        gram[i * n + j] += w * row[i] * row[j];
                    }
                }
            }
            let l = cholesky(&gram, n)?;
            let r = inverse_lower_transposed(&l, n);
            coeffs = matmul(&coeffs, &r, n);
        }
        Ok(Self { degree, exponents, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[(usize, usize)] {
        &self.exponents
    }

    fn check_order(&self, order: usize) -> Result<()> {
        if order > self.degree + 1 {
            return Err(Error::UnsupportedOrder { order, max: self.degree + 1 });
        }
        Ok(())
    }

    /// `∂_x^a ∂_y^b` of every basis function at `xi`, written into `out`.
    pub fn eval_point(&self, xi: Point, (a, b): (usize, usize), out: &mut [f64]) -> Result<()> {
        self.check_order(a + b)?;
        self.eval_unchecked(xi, a, b, out);
        Ok(())
    }

    fn eval_unchecked(&self, xi: Point, a: usize, b: usize, out: &mut [f64]) {
        let n = self.dim();
        out[..n].fill(0.0);
        if a + b > self.degree {
            return;
        }
        let (dx, dy) = (xi[0] - CENTER, xi[1] - CENTER);
        for (m, &(ea, eb)) in self.exponents.iter().enumerate() {
            if ea < a || eb < b {
                continue;
            }
            let mono = falling(ea, a) * falling(eb, b) * dx.powi((ea - a) as i32) * dy.powi((eb - b) as i32);
            let row = &self.coeffs[m * n..(m + 1) * n];
            for (o, c) in out.iter_mut().zip(row) {
                *o += c * mono;
            }
        }
    }

    /// Values of `∂_x^a ∂_y^b φ_j` at each point (rows = points).
    pub fn eval(&self, points: &[Point], deriv: (usize, usize)) -> Result<BasisTable> {
        self.check_order(deriv.0 + deriv.1)?;
        let n = self.dim();
        let mut data = vec![0.0; points.len() * n];
        for (p, chunk) in points.iter().zip(data.chunks_mut(n)) {
            self.eval_unchecked(*p, deriv.0, deriv.1, chunk);
        }
        Ok(BasisTable { npts: points.len(), nfun: n, data })
    }

    /// All reference partial derivatives up to total order `order` at `xi`.
    pub fn partials(&self, xi: Point, order: usize) -> Result<Partials> {
        self.check_order(order)?;
        let n = self.dim();
        let mut data = vec![0.0; (order + 1) * (order + 2) / 2 * n];
        for j in 0..=order {
            for s in 0..=j {
                let off = Partials::offset(j, s) * n;
                self.eval_unchecked(xi, s, j - s, &mut data[off..off + n]);
            }
        }
        Ok(Partials { order, dim: n, data })
    }

    /// `(d_1·∇)(d_2·∇)⋯(d_j·∇) φ` at `xi` for reference directions `dirs`.
    pub fn eval_directional(&self, xi: Point, dirs: &[Point], out: &mut [f64]) -> Result<()> {
        let p = self.partials(xi, dirs.len())?;
        p.directional(dirs, out);
        Ok(())
    }
}

/// Reference partials `∂_x^s ∂_y^{j-s}` of all basis functions, stored by
/// total order `j` then `s`.
#[derive(Debug, Clone)]
pub struct Partials {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Partials {
    #[inline]
    fn offset(j: usize, s: usize) -> usize {
        j * (j + 1) / 2 + s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `∂_x^a ∂_y^b` of every basis function.
    pub fn get(&self, a: usize, b: usize) -> &[f64] {
        assert!(a + b <= self.order);
        let off = Self::offset(a + b, a) * self.dim;
        &self.data[off..off + self.dim]
    }

    /// Expands `Π_k (d_k·∇)` into partials and accumulates into `out`.
    pub fn directional(&self, dirs: &[Point], out: &mut [f64]) {
        let j = dirs.len();
        assert!(j <= self.order);
        // c[s] multiplies ∂_x^s ∂_y^{j-s}.
        let mut c = vec![0.0; j + 1];
        c[0] = 1.0;
        for (k, d) in dirs.iter().enumerate() {
            for s in (0..=k + 1).rev() {
                let from_x = if s > 0 { c[s - 1] * d[0] } else { 0.0 };
                c[s] = from_x + c[s] * d[1];
            }
        }
        out[..self.dim].fill(0.0);
        for (s, &cs) in c.iter().enumerate() {
            if cs == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.get(s, j - s)) {
                *o += cs * v;
            }
        }
    }
}

/// Row-major table of basis values, rows = points, columns = functions.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub npts: usize,
    pub nfun: usize,
    pub data: Vec<f64>,
}

impl BasisTable {
    pub fn row(&self, pt: usize) -> &[f64] {
        &self.data[pt * self.nfun..(pt + 1) * self.nfun]
    }

    pub fn get(&self, pt: usize, fun: usize) -> f64 {
        self.data[pt * self.nfun + fun]
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    }
    c
}

/// Lower Cholesky factor of the symmetric matrix whose lower triangle is `a`.
fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let d = a[j * n + j] - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
        if d <= 0.0 {
            return Err(Error::Config("monomial Gram matrix is not positive definite".into()));
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// `L⁻ᵀ` for lower-triangular `L`.
fn inverse_lower_transposed(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        for i in col..n {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (col..i).map(|k| l[i * n + k] * inv[k * n + col]).sum();
            inv[i * n + col] = (rhs - s) / l[i * n + i];
        }
    }
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = inv[i * n + j];
        }
    }
    t
}
