//! The discrete problem: find `u_h ∈ V_h^p` with
//!
//! ```text
//!   a_h^q(u_h, v) - k²(u_h, v) + ik⟨u_h, v⟩_{Γ_R} = (f, v) + ⟨g, v⟩_{Γ_R}   ∀ v ∈ V_h^p
//! ```
//!
//! Matrices follow the convention `A[i][j] = form(φ_j, φ_i)`; degrees of
//! freedom are numbered element-major, basis-minor.

mod forms;
mod penalty;

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

pub use forms::{Assembler, FormMatrices, FormVectors};
pub use penalty::{auto_penalty, auto_penalty_scaled, PenaltyConfig, PenaltyScaling};

use crate::basis::ReferenceBasis;
use crate::exact::{robin_data, source_term};
use crate::field::{require_order, DgFunction, Field};
use crate::mesh::{DomainSpec, Mesh, Point};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

pub type SourceFn = dyn Fn(Point) -> Complex64 + Send + Sync;
/// `g(x, n)` with `n` the outward unit normal at `x`.
pub type RobinFn = dyn Fn(Point, Point) -> Complex64 + Send + Sync;

pub struct HelmholtzProblem {
    pub k: f64,
    pub domain: DomainSpec,
    pub source: Box<SourceFn>,
    pub robin: Box<RobinFn>,
}

impl std::fmt::Debug for HelmholtzProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzProblem").field("k", &self.k).field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl HelmholtzProblem {
    pub fn new(k: f64, domain: DomainSpec, source: Box<SourceFn>, robin: Box<RobinFn>) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::Config(format!("wave number must be positive, got {k}")));
        }
        Ok(Self { k, domain, source, robin })
    }

    /// `f = 0`, `g = 0`.
    pub fn homogeneous(k: f64, domain: DomainSpec) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        Self::new(k, domain, Box::new(move |_| zero), Box::new(move |_, _| zero))
    }

    /// Data manufactured from a closed-form `u`: `f = -Δu - k²u`,
    /// `g = ∂u/∂n + iku`.
    pub fn from_exact<F: Field + Send + 'static>(k: f64, domain: DomainSpec, u: F) -> Result<Self> {
        require_order(&u, 2)?;
        let u = Arc::new(u);
        let v = Arc::clone(&u);
        Self::new(k, domain, Box::new(move |x| source_term(&*u, k, x)), Box::new(move |x, n| robin_data(&*v, k, x, n)))
    }
}

/// Assembled `A x = b`.
#[derive(Debug, Clone)]
pub struct ComplexSystem {
    pub matrix: CsrMatrix<Complex64>,
    pub rhs: Vec<Complex64>,
    pub n_elements: usize,
    pub degree: usize,
    pub config: PenaltyConfig,
}

impl ComplexSystem {
    pub fn n_dofs(&self) -> usize {
        self.rhs.len()
    }

    /// Writes the matrix in the `%%ComplexCOO` coordinate format.
    pub fn write_matrix<W: Write>(&self, w: W) -> std::io::Result<()> {
        self.matrix.write_coo(w)
    }
}

#[derive(Debug, Clone)]
pub struct DgSolution {
    pub coefficients: Vec<Complex64>,
    pub degree: usize,
    pub n_elements: usize,
    pub config: PenaltyConfig,
}

impl DgSolution {
    pub fn view<'a>(&'a self, mesh: &'a Mesh, basis: &'a ReferenceBasis) -> Result<DgFunction<'a>> {
        if basis.degree() != self.degree || mesh.n_elements() != self.n_elements {
            return Err(Error::Config("solution does not match the mesh or basis".into()));
        }
        DgFunction::new(mesh, basis, &self.coefficients)
    }
}

/// Options shared by the assembly drivers.
#[derive(Debug, Clone, Copy, Default)]
pub struct AssemblyOptions {
    /// Added to the default quadrature exactness `2p + 2`.
    pub quad_bump: usize,
}

impl AssemblyOptions {
    pub fn exactness(&self, p: usize) -> usize {
        2 * p + 2 + self.quad_bump
    }
}

fn mass_only_config() -> PenaltyConfig {
    PenaltyConfig::new(vec![1.0], 0.0).expect("valid")
}

/// Matrix of `a_h^q`.
pub fn assemble_ahq(mesh: &Mesh, basis: &ReferenceBasis, cfg: &PenaltyConfig) -> Result<CsrMatrix<Complex64>> {
    Ok(Assembler::new(mesh, basis, cfg)?.matrices()?.a_hq())
}

/// Matrix of `(u, v)`.
pub fn assemble_mass(mesh: &Mesh, basis: &ReferenceBasis) -> Result<CsrMatrix<Complex64>> {
    let cfg = mass_only_config();
    Ok(Assembler::new(mesh, basis, &cfg)?.matrices()?.mass.to_complex())
}

/// Matrix of `⟨u, v⟩_{Γ_R}`.
pub fn assemble_robin(mesh: &Mesh, basis: &ReferenceBasis) -> Result<CsrMatrix<Complex64>> {
    let cfg = mass_only_config();
    Ok(Assembler::new(mesh, basis, &cfg)?.matrices()?.robin.to_complex())
}

pub fn assemble_system(problem: &HelmholtzProblem, mesh: &Mesh, basis: &ReferenceBasis, cfg: &PenaltyConfig) -> Result<ComplexSystem> {
    assemble_system_with(problem, mesh, basis, cfg, AssemblyOptions::default())
}

pub fn assemble_system_with(
    problem: &HelmholtzProblem,
    mesh: &Mesh,
    basis: &ReferenceBasis,
    cfg: &PenaltyConfig,
    opts: AssemblyOptions,
) -> Result<ComplexSystem> {
    let asm = Assembler::with_exactness(mesh, basis, cfg, opts.exactness(basis.degree()))?;
    let matrix = asm.matrices()?.helmholtz(problem.k);
    let rhs = asm.load(&problem.source, &problem.robin);
    Ok(ComplexSystem { matrix, rhs, n_elements: mesh.n_elements(), degree: basis.degree(), config: cfg.clone() })
}

/// System whose solution is the elliptic projection `ũ_h` of `u`:
/// `a_h^q(ũ_h, v) + ik⟨ũ_h, v⟩_{Γ_R} = a_h^q(u, v) + ik⟨u, v⟩_{Γ_R}`.
pub fn assemble_projection_system(
    u: &dyn Field,
    mesh: &Mesh,
    basis: &ReferenceBasis,
    cfg: &PenaltyConfig,
    k: f64,
    opts: AssemblyOptions,
) -> Result<ComplexSystem> {
    require_order(u, cfg.q + 1)?;
    let asm = Assembler::with_exactness(mesh, basis, cfg, opts.exactness(basis.degree()))?;
    let matrix = asm.matrices()?.projection(k);
    let act = asm.action(u)?;
    let ik = Complex64::new(0.0, k);
    let rhs = act.a_hq().iter().zip(&act.robin).map(|(a, r)| a + ik * r).collect();
    Ok(ComplexSystem { matrix, rhs, n_elements: mesh.n_elements(), degree: basis.degree(), config: cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{PlaneWave, Polynomial};
    use crate::mesh::{build_structured_mesh, EdgeKind};

    fn ones(mesh: &Mesh, basis: &ReferenceBasis) -> Vec<Complex64> {
        // φ_0 = √2 on the reference triangle.
        let mut v = vec![Complex64::new(0.0, 0.0); mesh.n_elements() * basis.dim()];
        for k in 0..mesh.n_elements() {
            v[k * basis.dim()] = Complex64::new(1.0 / 2f64.sqrt(), 0.0);
        }
        v
    }

    #[test]
    fn constant_function_is_in_the_kernel_of_ahq() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 3, 3).unwrap();
        for p in 1..=3 {
            let basis = ReferenceBasis::new(p).unwrap();
            let cfg = auto_penalty(mesh.h_max(), p, p).unwrap();
            let a = assemble_ahq(&mesh, &basis, &cfg).unwrap();
            let one = ones(&mesh, &basis);
            assert!(a.sesquilinear(&one, &one).norm() < 1e-12);
        }
    }

    #[test]
    fn mass_and_robin_of_one() {
        let square = DomainSpec::unit_square();
        let mesh = build_structured_mesh(&square, 2, 2).unwrap();
        let basis = ReferenceBasis::new(2).unwrap();
        let one = ones(&mesh, &basis);
        let m = assemble_mass(&mesh, &basis).unwrap();
        assert!((m.sesquilinear(&one, &one) - 1.0).norm() < 1e-13);
        let b = assemble_robin(&mesh, &basis).unwrap();
        assert!((b.sesquilinear(&one, &one) - 4.0).norm() < 1e-13);

        let annulus = square.with_hole([0.25, 0.25], [0.75, 0.75]).unwrap();
        let mesh = build_structured_mesh(&annulus, 4, 4).unwrap();
        assert_eq!(mesh.count(EdgeKind::Dirichlet), 8);
        let one = ones(&mesh, &basis);
        let b = assemble_robin(&mesh, &basis).unwrap();
        assert!((b.sesquilinear(&one, &one) - 4.0).norm() < 1e-13);
    }

    #[test]
    fn constant_jump_penalty() {
        // One shared edge of length √2 between values 3 (owner) and 7.
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 1, 1).unwrap();
        let basis = ReferenceBasis::new(1).unwrap();
        let cfg = PenaltyConfig::new(vec![2.5], 0.0).unwrap();
        let m = Assembler::new(&mesh, &basis, &cfg).unwrap().matrices().unwrap();
        let (_, e) = mesh.edges_of(EdgeKind::Interior).next().unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 6];
        let s = 1.0 / 2f64.sqrt();
        v[e.owner * 3] = Complex64::new(3.0 * s, 0.0);
        v[e.neighbor.unwrap() * 3] = Complex64::new(7.0 * s, 0.0);
        let expected = 16.0 * 2.5 * 1.0 / e.length * e.length;
        assert!((m.jumps[0].sesquilinear(&v, &v).re - expected).abs() < 1e-12);
    }

    #[test]
    fn complex_symmetry_with_sigma_one() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 3, 2).unwrap();
        let basis = ReferenceBasis::new(2).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 2, 2).unwrap();
        let a = assemble_ahq(&mesh, &basis, &cfg).unwrap();
        let d = CsrMatrix::linear_combination([(Complex64::new(1.0, 0.0), &a), (Complex64::new(-1.0, 0.0), &a.transpose())]);
        assert!(d.max_abs() <= 1e-12 * a.max_abs());
    }

    #[test]
    fn zero_data_gives_zero_load() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 2, 2).unwrap();
        let basis = ReferenceBasis::new(1).unwrap();
        let problem = HelmholtzProblem::homogeneous(3.0, DomainSpec::unit_square()).unwrap();
        let sys = assemble_system(&problem, &mesh, &basis, &auto_penalty(mesh.h_max(), 1, 1).unwrap()).unwrap();
        assert!(sys.rhs.iter().all(|b| b.norm() == 0.0));
        assert_eq!(sys.n_dofs(), 24);
    }

    #[test]
    fn plane_wave_load_is_boundary_only() {
        let u = PlaneWave::new(4.0);
        let problem = HelmholtzProblem::from_exact(4.0, DomainSpec::unit_square(), u).unwrap();
        assert!((problem.source)([0.3, 0.2]).norm() < 1e-12);
        assert!(HelmholtzProblem::homogeneous(0.0, DomainSpec::unit_square()).is_err());
    }

    #[test]
    fn projection_requires_derivatives() {
        struct Shallow;
        impl Field for Shallow {
            fn partial(&self, _: usize, _: Point, _: usize, _: usize) -> Complex64 {
                Complex64::new(0.0, 0.0)
            }
            fn max_order(&self) -> usize {
                1
            }
        }
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 2, 2).unwrap();
        let basis = ReferenceBasis::new(2).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 2, 2).unwrap();
        let r = assemble_projection_system(&Shallow, &mesh, &basis, &cfg, 1.0, AssemblyOptions::default());
        assert!(matches!(r, Err(Error::Config(_))));
        let poly = Polynomial::quartic_bubble();
        assert!(assemble_projection_system(&poly, &mesh, &basis, &cfg, 1.0, AssemblyOptions::default()).is_ok());
    }
}
