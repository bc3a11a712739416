//! Local Rellich identities with the weight `α = x - x_Ω₁`, evaluated by
//! quadrature on every element and edge:
//!
//! ```text
//!   2‖v‖²_K + 2Re(v, α·∇v)_K          = ∫_{∂K} α·n_K |v|²
//!   2Re(∇v, ∇(α·∇v))_K                = ∫_{∂K} α·n_K |∇v|²
//!   ⟨{∂_n v}, [α·∇v]⟩_e - ⟨α·n {∇v}, [∇v]⟩_e = ⟨α·τ {∂_n v} - α·n {∂_τ v}, [∂_τ v]⟩_e
//! ```
//!
//! The third identity is checked on every edge of `E_h^{ID}`.

use num_complex::Complex64;
use serde::Serialize;

use super::jumps_and_averages;
use crate::basis::{edge_rule, triangle_rule};
use crate::field::{require_order, Field};
use crate::mesh::{dot, DomainSpec, Mesh};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct RellichReport {
    /// Absolute residual of the first identity on each element.
    pub volume_value: Vec<f64>,
    /// Absolute residual of the gradient identity on each element.
    pub volume_gradient: Vec<f64>,
    /// Absolute residual of the edge identity on each edge (`0` on Robin edges).
    pub edge: Vec<f64>,
    /// Per identity: largest residual divided by the largest term magnitude.
    pub max_relative: [f64; 3],
}

impl RellichReport {
    pub fn worst(&self) -> f64 {
        self.max_relative.iter().copied().fold(0.0, f64::max)
    }
}

fn finish(residuals: &[f64], scale: f64) -> f64 {
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Evaluates the identities for `v` with quadrature of the given exactness.
/// `v` must provide second derivatives.
pub fn rellich_check(v: &dyn Field, mesh: &Mesh, domain: &DomainSpec, exactness: usize) -> Result<RellichReport> {
    require_order(v, 2)?;
    let tri = triangle_rule(exactness);
    let line = edge_rule(exactness);
    let ne = mesh.n_elements();
    let (mut r1, mut r2) = (vec![0.0; ne], vec![0.0; ne]);
    let (mut s1, mut s2) = (0.0f64, 0.0f64);

    for k in 0..ne {
        let g = mesh.geometry(k);
        let (mut norm2, mut cross1, mut cross2) = (0.0, 0.0, 0.0);
        for (xi, w) in tri.iter() {
            let x = g.to_physical(xi);
            let wd = w * g.det;
            let a = domain.alpha(x);
            let val = v.value(k, x);
            let grad = v.gradient(k, x);
            let (vxx, vxy, vyy) = (v.partial(k, x, 2, 0), v.partial(k, x, 1, 1), v.partial(k, x, 0, 2));
            let a_grad = grad[0] * a[0] + grad[1] * a[1];
            // ∇(α·∇v) = ∇v + H α
            let d = [grad[0] + vxx * a[0] + vxy * a[1], grad[1] + vxy * a[0] + vyy * a[1]];
            norm2 += wd * val.norm_sqr();
            cross1 += wd * (val * a_grad.conj()).re;
            cross2 += wd * (grad[0] * d[0].conj() + grad[1] * d[1].conj()).re;
        }
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ei in &mesh.element_edges(k) {
            let e = &mesh.edges()[ei];
            let n = mesh.outward_normal(k, e);
            for (t, w) in line.iter() {
                let x = mesh.edge_point(e, t[0]);
                let an = dot(domain.alpha(x), n) * w * e.length;
                let grad = v.gradient(k, x);
                b1 += an * v.value(k, x).norm_sqr();
                b2 += an * (grad[0].norm_sqr() + grad[1].norm_sqr());
            }
        }
        r1[k] = (2.0 * norm2 + 2.0 * cross1 - b1).abs();
        r2[k] = (2.0 * cross2 - b2).abs();
        s1 = s1.max(2.0 * norm2 + 2.0 * cross1.abs() + b1.abs());
        s2 = s2.max(2.0 * cross2.abs() + b2.abs());
    }

    let mut r3 = vec![0.0; mesh.n_edges()];
    let mut s3 = 0.0f64;
    for (ei, e) in mesh.edges().iter().enumerate() {
        if !e.kind.in_id() {
            continue;
        }
        let (mut lhs, mut rhs, mut mag) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.0);
        for (t, w) in line.iter() {
            let x = mesh.edge_point(e, t[0]);
            let wl = w * e.length;
            let a = domain.alpha(x);
            let (an, at) = (dot(a, e.normal), dot(a, e.tangent));
            // Quantities: [value, ∂_τ, ∂_n].
            let (jump, avg) = jumps_and_averages(v, x, e, 1);
            let jump_a_grad = jump[2] * an + jump[1] * at;
            let t1 = avg[2] * jump_a_grad.conj();
            let t2 = (avg[2] * jump[2].conj() + avg[1] * jump[1].conj()) * an;
            let t3 = (avg[2] * at - avg[1] * an) * jump[1].conj();
            lhs += (t1 - t2) * wl;
            rhs += t3 * wl;
            mag += wl * (t1.norm() + t2.norm() + t3.norm());
        }
        r3[ei] = (lhs - rhs).norm();
        s3 = s3.max(mag);
    }

    let max_relative = [finish(&r1, s1), finish(&r2, s2), finish(&r3, s3)];
    Ok(RellichReport { volume_value: r1, volume_gradient: r2, edge: r3, max_relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Polynomial;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn constant_and_linear_functions() {
        let d = DomainSpec::unit_square();
        let mesh = build_structured_mesh(&d, 1, 1).unwrap();
        let c = Polynomial::constant(Complex64::new(1.5, 2.0));
        let r = rellich_check(&c, &mesh, &d, 5).unwrap();
        assert!(r.worst() < 1e-14);
        let lin = Polynomial::new(vec![(1, 0, Complex64::new(2.0, 1.0)), (0, 1, Complex64::new(-0.5, 0.3))]);
        let r = rellich_check(&lin, &mesh, &d, 5).unwrap();
        assert!(r.worst() < 1e-12);
    }

    #[test]
    fn under_integration_is_visible() {
        // A sextic on a coarse rule leaves a residual that vanishes once
        // the rule is exact.
        let d = DomainSpec::unit_square();
        let mesh = build_structured_mesh(&d, 2, 2).unwrap();
        let u = Polynomial::new(vec![(6, 0, Complex64::new(1.0, 0.0)), (3, 3, Complex64::new(0.0, 1.0))]);
        let coarse = rellich_check(&u, &mesh, &d, 3).unwrap().worst();
        let exact = rellich_check(&u, &mesh, &d, 13).unwrap().worst();
        assert!(coarse > 1e-6, "{coarse}");
        assert!(exact < 1e-12, "{exact}");
    }
}
