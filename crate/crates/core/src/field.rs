//! Functions that can be evaluated element by element together with their
//! derivatives: discrete DG functions, closed-form solutions, and
//! differences of the two.

use num_complex::Complex64;

use crate::basis::ReferenceBasis;
use crate::mesh::{Mesh, Point};
use crate::{Error, Result};

/// `C(n, k)` as a float.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub trait Field: Sync {
    /// `∂_x^a ∂_y^b` of the restriction to `element`, evaluated at `x`
    /// (which may lie on the element boundary).
    fn partial(&self, element: usize, x: Point, a: usize, b: usize) -> Complex64;

    /// Highest derivative order the field can provide.
    fn max_order(&self) -> usize {
        usize::MAX
    }

    fn value(&self, element: usize, x: Point) -> Complex64 {
        self.partial(element, x, 0, 0)
    }

    fn gradient(&self, element: usize, x: Point) -> [Complex64; 2] {
        [self.partial(element, x, 1, 0), self.partial(element, x, 0, 1)]
    }

    /// `(d·∇)^j u`.
    fn directional(&self, element: usize, x: Point, d: Point, j: usize) -> Complex64 {
        (0..=j)
            .map(|s| self.partial(element, x, s, j - s) * (binomial(j, s) * d[0].powi(s as i32) * d[1].powi((j - s) as i32)))
            .sum()
    }

    fn laplacian(&self, element: usize, x: Point) -> Complex64 {
        self.partial(element, x, 2, 0) + self.partial(element, x, 0, 2)
    }
}

/// Fails unless `field` provides derivatives up to `order`.
pub fn require_order(field: &dyn Field, order: usize) -> Result<()> {
    if field.max_order() < order {
        return Err(Error::Config(format!(
            "field provides derivatives up to order {}, but order {order} is required",
            field.max_order()
        )));
    }
    Ok(())
}

/// A piecewise polynomial in `V_h^p`, viewed through its modal coefficients
/// (element-major, basis-minor).
#[derive(Clone, Copy)]
pub struct DgFunction<'a> {
    mesh: &'a Mesh,
    basis: &'a ReferenceBasis,
    coeffs: &'a [Complex64],
}

impl<'a> DgFunction<'a> {
    pub fn new(mesh: &'a Mesh, basis: &'a ReferenceBasis, coeffs: &'a [Complex64]) -> Result<Self> {
        let expected = mesh.n_elements() * basis.dim();
        if coeffs.len() != expected {
            return Err(Error::Config(format!("expected {expected} coefficients, got {}", coeffs.len())));
        }
        Ok(Self { mesh, basis, coeffs })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        self.coeffs
    }

    fn eval_with(&self, element: usize, x: Point, dirs: &[Point]) -> Complex64 {
        if dirs.len() > self.basis.degree() {
            return Complex64::new(0.0, 0.0);
        }
        let geom = self.mesh.geometry(element);
        let n = self.basis.dim();
        let partials = self.basis.partials(geom.to_reference(x), dirs.len()).expect("order checked above");
        let mut vals = vec![0.0; n];
        partials.directional(dirs, &mut vals);
        let c = &self.coeffs[element * n..(element + 1) * n];
        c.iter().zip(&vals).map(|(c, v)| c * v).sum()
    }
}

impl Field for DgFunction<'_> {
    fn partial(&self, element: usize, x: Point, a: usize, b: usize) -> Complex64 {
        let inv = self.mesh.geometry(element).inverse;
        // Physical unit directions e_x, e_y in reference coordinates.
        let dx = [inv[0][0], inv[1][0]];
        let dy = [inv[0][1], inv[1][1]];
        let dirs: Vec<Point> = std::iter::repeat_n(dx, a).chain(std::iter::repeat_n(dy, b)).collect();
        self.eval_with(element, x, &dirs)
    }

    fn directional(&self, element: usize, x: Point, d: Point, j: usize) -> Complex64 {
        let r = self.mesh.geometry(element).reference_direction(d);
        self.eval_with(element, x, &vec![r; j])
    }
}

/// `a - b`.
pub struct Difference<'a> {
    pub a: &'a dyn Field,
    pub b: &'a dyn Field,
}

impl Field for Difference<'_> {
    fn partial(&self, element: usize, x: Point, a: usize, b: usize) -> Complex64 {
        self.a.partial(element, x, a, b) - self.b.partial(element, x, a, b)
    }

    fn max_order(&self) -> usize {
        self.a.max_order().min(self.b.max_order())
    }

    fn directional(&self, element: usize, x: Point, d: Point, j: usize) -> Complex64 {
        self.a.directional(element, x, d, j) - self.b.directional(element, x, d, j)
    }
}

/// `c · u`.
pub struct Scaled<'a> {
    pub factor: Complex64,
    pub field: &'a dyn Field,
}

impl Field for Scaled<'_> {
    fn partial(&self, element: usize, x: Point, a: usize, b: usize) -> Complex64 {
        self.factor * self.field.partial(element, x, a, b)
    }

    fn max_order(&self) -> usize {
        self.field.max_order()
    }
}

/// The zero function.
pub struct Zero;

impl Field for Zero {
    fn partial(&self, _: usize, _: Point, _: usize, _: usize) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, DomainSpec};

    /// Interpolates `u` into `V_h^p` by elementwise L² projection.
    fn project(mesh: &Mesh, basis: &ReferenceBasis, u: impl Fn(Point) -> f64) -> Vec<Complex64> {
        let rule = crate::basis::triangle_rule(2 * basis.degree() + 2);
        let t = basis.eval(&rule.points, (0, 0)).unwrap();
        let mut c = Vec::new();
        for k in 0..mesh.n_elements() {
            let g = mesh.geometry(k);
            for i in 0..basis.dim() {
                // (u, φ_i)_K / (φ_i, φ_i)_K with (φ_i, φ_i)_K = det J.
                let s: f64 = rule.iter().enumerate().map(|(q, (xi, w))| w * u(g.to_physical(xi)) * t.get(q, i)).sum();
                c.push(Complex64::new(s, 0.0));
            }
        }
        c
    }

    #[test]
    fn chain_rule_reproduces_quadratic_derivatives() {
        let mesh = build_structured_mesh(&DomainSpec::rectangle([0.0, 0.0], [2.0, 1.0]).unwrap(), 3, 2).unwrap();
        let basis = ReferenceBasis::new(2).unwrap();
        let u = |x: Point| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[0] + 3.0 * x[0] * x[1] - 2.0 * x[1] * x[1];
        let c = project(&mesh, &basis, u);
        let f = DgFunction::new(&mesh, &basis, &c).unwrap();
        for k in 0..mesh.n_elements() {
            let x = mesh.centroid(k);
            let g = f.gradient(k, x);
            assert!((g[0].re - (2.0 + x[0] + 3.0 * x[1])).abs() < 1e-12);
            assert!((g[1].re - (-1.0 + 3.0 * x[0] - 4.0 * x[1])).abs() < 1e-12);
            assert!((f.partial(k, x, 1, 1).re - 3.0).abs() < 1e-12);
            assert!((f.laplacian(k, x).re - (1.0 - 4.0)).abs() < 1e-12);
            let d = [0.6, 0.8];
            // (d·∇)² u = dᵀ H d with H = [[1, 3], [3, -4]].
            let expect = 0.36 * 1.0 + 2.0 * 0.48 * 3.0 - 4.0 * 0.64;
            assert!((f.directional(k, x, d, 2).re - expect).abs() < 1e-12);
            assert!(f.directional(k, x, d, 3).norm() < 1e-12);
        }
    }

    #[test]
    fn wrong_coefficient_count() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 1, 1).unwrap();
        let basis = ReferenceBasis::new(1).unwrap();
        assert!(DgFunction::new(&mesh, &basis, &[Complex64::new(0.0, 0.0); 5]).is_err());
    }
}
