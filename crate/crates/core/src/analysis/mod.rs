//! Broken norms, stability diagnostics and checks of the discrete identities.

mod identities;
mod rellich;

use num_complex::Complex64;
use serde::Serialize;

pub use identities::{
    coercivity_constant, identity_suite, q_nesting_defect, random_dg_coefficients, split_check, symmetry_defect, IdentityReport,
    SplitCheck,
};
pub use rellich::{rellich_check, RellichReport};

use crate::assembly::{assemble_projection_system, Assembler, AssemblyOptions, DgSolution, HelmholtzProblem, PenaltyConfig};
use crate::basis::{edge_rule, triangle_rule, ReferenceBasis};
use crate::field::{require_order, Difference, Field};
use crate::mesh::{Edge, EdgeKind, Mesh};
use crate::solver::{solve, DEFAULT_TOLERANCE};
use crate::{Error, Result};

/// Broken norms of a piecewise smooth function. Penalty entries are the
/// squared quadratic forms, i.e. exactly the contributions to `Im a_h^q(v, v)`.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    /// `|v|_{1,h}`
    pub h1_semi: f64,
    /// `‖v‖_{1,h,q}`
    pub norm_1hq: f64,
    /// `⦀v⦀`
    pub triple: f64,
    pub l2: f64,
    pub l2_robin: f64,
    /// `L_1(v, v)`
    pub l1: f64,
    /// `J_j(v, v)`, `j = 0..=q`
    pub jumps: Vec<f64>,
    /// `Σ_{E^{ID}} h_e / (γ_0 p) ‖{∂v/∂n}‖²_e`
    pub flux_average: f64,
}

impl NormReport {
    pub fn penalty(&self) -> f64 {
        self.l1 + self.jumps.iter().sum::<f64>()
    }
}

/// Traces `[value, ∂_τ, ∂_n, …, ∂_n^m]` of element `k` at `x` on edge `e`.
pub(crate) fn edge_traces(u: &dyn Field, k: usize, x: [f64; 2], e: &Edge, m: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 + m);
    out.push(u.value(k, x));
    out.push(u.directional(k, x, e.tangent, 1));
    for j in 1..=m {
        out.push(u.directional(k, x, e.normal, j));
    }
    out
}

/// Jump and average of each trace quantity on `e` (one-sided on boundary
/// edges).
pub(crate) fn jumps_and_averages(u: &dyn Field, x: [f64; 2], e: &Edge, m: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let own = edge_traces(u, e.owner, x, e, m);
    match e.neighbor {
        None => (own.clone(), own),
        Some(nb) => {
            let other = edge_traces(u, nb, x, e, m);
            let jump = own.iter().zip(&other).map(|(a, b)| a - b).collect();
            let avg = own.iter().zip(&other).map(|(a, b)| (a + b) * 0.5).collect();
            (jump, avg)
        }
    }
}

/// Computes the broken norms of `v` with quadrature of the given exactness.
/// `v` must provide derivatives up to `max(q, 1)`.
pub fn norms(v: &dyn Field, mesh: &Mesh, p: usize, cfg: &PenaltyConfig, exactness: usize) -> Result<NormReport> {
    let m = cfg.q.max(1);
    require_order(v, m)?;
    cfg.validate(p)?;
    let pf = p as f64;
    let tri = triangle_rule(exactness);
    let line = edge_rule(exactness);

    let (mut semi, mut l2) = (0.0, 0.0);
    for k in 0..mesh.n_elements() {
        let g = mesh.geometry(k);
        for (xi, w) in tri.iter() {
            let x = g.to_physical(xi);
            let wd = w * g.det;
            let grad = v.gradient(k, x);
            semi += wd * (grad[0].norm_sqr() + grad[1].norm_sqr());
            l2 += wd * v.value(k, x).norm_sqr();
        }
    }

    let mut jumps = vec![0.0; cfg.q + 1];
    let (mut l1, mut flux_average, mut robin) = (0.0, 0.0, 0.0);
    for e in mesh.edges() {
        let h = e.length;
        for (t, w) in line.iter() {
            let x = mesh.edge_point(e, t[0]);
            let wl = w * h;
            let (jump, avg) = jumps_and_averages(v, x, e, m);
            match e.kind {
                EdgeKind::Robin => robin += wl * jump[0].norm_sqr(),
                kind => {
                    jumps[0] += wl * cfg.gamma[0] * pf / h * jump[0].norm_sqr();
                    l1 += wl * cfg.beta1 * pf / h * jump[1].norm_sqr();
                    flux_average += wl * h / (cfg.gamma[0] * pf) * avg[2].norm_sqr();
                    if kind == EdgeKind::Interior {
                        for j in 1..=cfg.q {
                            jumps[j] += wl * cfg.gamma[j] * (h / pf).powi(2 * j as i32 - 1) * jump[1 + j].norm_sqr();
                        }
                    }
                }
            }
        }
    }
    let penalty = l1 + jumps.iter().sum::<f64>();
    Ok(NormReport {
        h1_semi: semi.sqrt(),
        norm_1hq: (semi + penalty).sqrt(),
        triple: (semi + penalty + flux_average).sqrt(),
        l2: l2.sqrt(),
        l2_robin: robin.sqrt(),
        l1,
        jumps,
        flux_average,
    })
}

/// Broken norms of `u - u_h` at quadrature exactness `2p + 4`.
pub fn error_vs_exact(
    u_h: &DgSolution,
    u: &dyn Field,
    mesh: &Mesh,
    basis: &ReferenceBasis,
    cfg: &PenaltyConfig,
) -> Result<NormReport> {
    let view = u_h.view(mesh, basis)?;
    let diff = Difference { a: u, b: &view };
    norms(&diff, mesh, basis.degree(), cfg, 2 * basis.degree() + 4)
}

/// `max_i |a_h^q(u, φ_i) - k²(u, φ_i) + ik⟨u, φ_i⟩ - (f, φ_i) - ⟨g, φ_i⟩| / scale`,
/// where `scale` is the largest sum of the magnitudes of the individual terms.
pub fn consistency_residual(
    u: &dyn Field,
    problem: &HelmholtzProblem,
    mesh: &Mesh,
    basis: &ReferenceBasis,
    cfg: &PenaltyConfig,
    opts: AssemblyOptions,
) -> Result<f64> {
    let asm = Assembler::with_exactness(mesh, basis, cfg, opts.exactness(basis.degree()))?;
    let act = asm.action(u)?;
    let a = act.a_hq();
    let load = asm.load(&problem.source, &problem.robin);
    let k = problem.k;
    let ik = Complex64::new(0.0, k);
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for i in 0..a.len() {
        let terms = [a[i], -k * k * act.mass[i], ik * act.robin[i], -load[i]];
        let r: Complex64 = terms.iter().sum();
        worst = worst.max(r.norm());
        scale = scale.max(terms.iter().map(|t| t.norm()).sum());
    }
    Ok(if scale > 0.0 { worst / scale } else { 0.0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    /// `M(f, g) = ‖f‖_Ω + ‖g‖_{Γ_R}`
    pub m_fg: f64,
    pub c_sta: f64,
    pub lambda: f64,
    pub lhs: f64,
    /// `lhs / (C_sta M)`
    pub ratio: f64,
    /// `‖u_h‖_{1,h,q} / M`
    pub energy_ratio: f64,
    /// `k ‖u_h‖_Ω / M`
    pub l2_ratio: f64,
    pub norm_1hq: f64,
    pub l2: f64,
    pub l2_robin: f64,
    /// Set when `M = 0` and every ratio is reported as 0.
    pub degenerate: bool,
}

/// The stability constant `C_sta(q)` with unit hidden constants.
pub fn stability_constant(mesh: &Mesh, p: usize, cfg: &PenaltyConfig, k: f64) -> f64 {
    let pf = p as f64;
    let g = &cfg.gamma;
    let b1 = cfg.beta1;
    let q = cfg.q;
    let ladder = (0..q).map(|j| (g[j] / g[j + 1]).sqrt()).fold(0.0, f64::max);
    let tangential = if q >= 1 { (b1 / g[1]).sqrt() } else { 0.0 };
    let (mut dir, mut int) = (0.0f64, 0.0f64);
    for e in mesh.edges() {
        let h = e.length;
        match e.kind {
            EdgeKind::Dirichlet => {
                dir = dir.max(g[0] * pf / h + pf.powi(5) / (g[0] * h * h) + b1 * pf.powi(5) / h.powi(3) + pf * pf / h);
            }
            EdgeKind::Interior => {
                let mut t = (pf * k * k * h * h + pf.powi(5)) / (g[0] * h * h) + pf / h * ladder + pf * pf / h + pf.powi(3) / (h * h) * tangential;
                if q < p {
                    t += g[q] * pf.powi(2 * q as i32 + 3) / (h * h);
                }
                int = int.max(t);
            }
            EdgeKind::Robin => {}
        }
    }
    1.0 / k + 1.0 / (k * k) + (dir + int) / (k * k)
}

/// Evaluates both sides of the discrete stability bound for a computed
/// solution.
pub fn stability_report(
    u_h: &DgSolution,
    problem: &HelmholtzProblem,
    mesh: &Mesh,
    basis: &ReferenceBasis,
    cfg: &PenaltyConfig,
) -> Result<StabilityReport> {
    if cfg != &u_h.config {
        return Err(Error::Config("penalty configuration differs from the one used to solve".into()));
    }
    let p = basis.degree();
    let k = problem.k;
    let exactness = 2 * p + 4;
    let view = u_h.view(mesh, basis)?;
    let nr = norms(&view, mesh, p, cfg, exactness)?;

    let tri = triangle_rule(exactness);
    let line = edge_rule(exactness);
    let mut f2 = 0.0;
    for kk in 0..mesh.n_elements() {
        let g = mesh.geometry(kk);
        for (xi, w) in tri.iter() {
            f2 += w * g.det * (problem.source)(g.to_physical(xi)).norm_sqr();
        }
    }
    let (mut g2, mut grad_r, mut dir) = (0.0, 0.0, 0.0);
    for e in mesh.edges().iter().filter(|e| e.kind != EdgeKind::Interior) {
        for (t, w) in line.iter() {
            let x = mesh.edge_point(e, t[0]);
            let wl = w * e.length;
            let grad = view.gradient(e.owner, x);
            let grad2 = grad[0].norm_sqr() + grad[1].norm_sqr();
            if e.kind == EdgeKind::Robin {
                g2 += wl * (problem.robin)(x, e.normal).norm_sqr();
                grad_r += wl * grad2;
            } else {
                dir += wl * (k * k * view.value(e.owner, x).norm_sqr() + grad2);
            }
        }
    }
    let d = &problem.domain;
    let m_fg = f2.sqrt() + g2.sqrt();
    let lhs = nr.l2 + nr.norm_1hq / k + nr.l2_robin + (d.c_outer * grad_r).sqrt() / k + (d.c_hole * dir).sqrt() / k;
    let c_sta = stability_constant(mesh, p, cfg, k);
    let degenerate = m_fg == 0.0;
    let ratio_of = |x: f64| if degenerate { 0.0 } else { x / m_fg };
    Ok(StabilityReport {
        m_fg,
        c_sta,
        lambda: cfg.lambda(p),
        lhs,
        ratio: ratio_of(lhs / c_sta),
        energy_ratio: ratio_of(nr.norm_1hq),
        l2_ratio: ratio_of(k * nr.l2),
        norm_1hq: nr.norm_1hq,
        l2: nr.l2,
        l2_robin: nr.l2_robin,
        degenerate,
    })
}

/// Outcome of solving for the elliptic projection `ũ_h` of `u`.
#[derive(Debug, Clone)]
pub struct ProjectionCheck {
    pub projection: DgSolution,
    /// `max_i |a_h^q(u - ũ_h, φ_i) + ik⟨u - ũ_h, φ_i⟩| / max_i |a_h^q(u, φ_i) + ik⟨u, φ_i⟩|`,
    /// evaluated through the field action rather than the matrix.
    pub orthogonality: f64,
    /// Errors `u - ũ_h`.
    pub error: NormReport,
}

/// Computes the elliptic projection of `u` and checks Galerkin orthogonality.
pub fn projection_check(
    u: &dyn Field,
    mesh: &Mesh,
    basis: &ReferenceBasis,
    cfg: &PenaltyConfig,
    k: f64,
    opts: AssemblyOptions,
) -> Result<ProjectionCheck> {
    let system = assemble_projection_system(u, mesh, basis, cfg, k, opts)?;
    let (projection, _) = solve(&system, DEFAULT_TOLERANCE)?;
    let view = projection.view(mesh, basis)?;
    let diff = Difference { a: u, b: &view };
    let asm = Assembler::with_exactness(mesh, basis, cfg, opts.exactness(basis.degree()))?;
    let act = asm.action(&diff)?;
    let ik = Complex64::new(0.0, k);
    let worst = act.a_hq().iter().zip(&act.robin).map(|(a, r)| (a + ik * r).norm()).fold(0.0, f64::max);
    let scale = system.rhs.iter().map(|b| b.norm()).fold(0.0, f64::max);
    let orthogonality = if scale > 0.0 { worst / scale } else { worst };
    let error = norms(&diff, mesh, basis.degree(), cfg, 2 * basis.degree() + 4)?;
    Ok(ProjectionCheck { projection, orthogonality, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_system, auto_penalty};
    use crate::exact::{PlaneWave, Polynomial};
    use crate::field::Zero;
    use crate::mesh::{build_structured_mesh, DomainSpec};

    #[test]
    fn norms_of_smooth_functions() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 4, 4).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 2, 2).unwrap();
        let c = Polynomial::constant(Complex64::new(2.0, -1.0));
        let n = norms(&c, &mesh, 2, &cfg, 6).unwrap();
        assert!(n.h1_semi < 1e-14 && n.norm_1hq < 1e-14 && n.triple < 1e-14);
        assert!((n.l2 - 5f64.sqrt()).abs() < 1e-13);

        let x = Polynomial::new(vec![(1, 0, Complex64::new(1.0, 0.0))]);
        let n = norms(&x, &mesh, 2, &cfg, 6).unwrap();
        assert!((n.h1_semi - 1.0).abs() < 1e-13);
        assert!(n.penalty() < 1e-24);
        assert!((n.l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-13);
        assert!(n.h1_semi <= n.norm_1hq && n.norm_1hq <= n.triple);
    }

    #[test]
    fn consistency_detects_wrong_robin_data() {
        let k = 5.0;
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 8, 8).unwrap();
        let basis = ReferenceBasis::new(2).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 2, 2).unwrap();
        let u = PlaneWave::new(k);
        let good = HelmholtzProblem::from_exact(k, DomainSpec::unit_square(), u).unwrap();
        let opts = AssemblyOptions::default();
        let r_good = consistency_residual(&u, &good, &mesh, &basis, &cfg, opts).unwrap();
        let bad = HelmholtzProblem::new(
            k,
            DomainSpec::unit_square(),
            Box::new(|_| Complex64::new(0.0, 0.0)),
            Box::new(move |x, n| crate::exact::robin_data(&u, k, x, n) * 1.01),
        )
        .unwrap();
        let r_bad = consistency_residual(&u, &bad, &mesh, &basis, &cfg, opts).unwrap();
        assert!(r_good < 1e-6, "{r_good}");
        assert!(r_bad >= 1e-3, "{r_bad}");
        let zero = HelmholtzProblem::homogeneous(k, DomainSpec::unit_square()).unwrap();
        assert_eq!(consistency_residual(&Zero, &zero, &mesh, &basis, &cfg, opts).unwrap(), 0.0);
    }

    #[test]
    fn zero_data_report_is_guarded() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 2, 2).unwrap();
        let basis = ReferenceBasis::new(1).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 1, 1).unwrap();
        let problem = HelmholtzProblem::homogeneous(2.0, DomainSpec::unit_square()).unwrap();
        let sys = assemble_system(&problem, &mesh, &basis, &cfg).unwrap();
        let (sol, _) = solve(&sys, 1e-10).unwrap();
        let rep = stability_report(&sol, &problem, &mesh, &basis, &cfg).unwrap();
        assert!(rep.degenerate);
        assert_eq!((rep.ratio, rep.energy_ratio, rep.l2_ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn coarse_mesh_ratio_is_finite() {
        // k h = 2 with h = √2 / nx.
        let k = 2.0 * 4.0 / 2f64.sqrt();
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 4, 4).unwrap();
        let basis = ReferenceBasis::new(1).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 1, 1).unwrap();
        let problem = HelmholtzProblem::from_exact(k, DomainSpec::unit_square(), PlaneWave::new(k)).unwrap();
        let (sol, _) = solve(&assemble_system(&problem, &mesh, &basis, &cfg).unwrap(), 1e-10).unwrap();
        let rep = stability_report(&sol, &problem, &mesh, &basis, &cfg).unwrap();
        assert!(rep.ratio.is_finite() && rep.ratio > 0.0);
        assert!(!rep.degenerate);
        assert!((rep.lambda - (1.0 + 1.0 / cfg.gamma[0])).abs() < 1e-15);
    }

    #[test]
    fn projection_of_a_global_polynomial_is_exact() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 4, 4).unwrap();
        for p in 1..=3 {
            let basis = ReferenceBasis::new(p).unwrap();
            let cfg = auto_penalty(mesh.h_max(), p, p).unwrap();
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(p as u64);
            let u = Polynomial::random(p, &mut rng);
            let c = projection_check(&u, &mesh, &basis, &cfg, 3.0, AssemblyOptions::default()).unwrap();
            assert!(c.orthogonality < 1e-10, "{}", c.orthogonality);
            assert!(c.error.l2 < 1e-10 && c.error.norm_1hq < 1e-9, "{:?}", c.error);
            let zero = projection_check(&Zero, &mesh, &basis, &cfg, 3.0, AssemblyOptions::default()).unwrap();
            assert!(zero.projection.coefficients.iter().all(|z| z.norm() == 0.0));
        }
    }
}
