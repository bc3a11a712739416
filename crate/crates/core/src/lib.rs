//! hp interior-penalty discontinuous Galerkin (IPDG) discretization of the
//! two-dimensional Helmholtz equation
//!
//! ```text
//!   -Δu - k²u = f          in Ω = Ω₁ \ D
//!   ∂u/∂n + iku = g        on Γ_R = ∂Ω₁
//!   u = 0                  on Γ_D = ∂D
//! ```
//!
//! with the degree-dependent multipenalty sesquilinear form
//! `a_h^q = b_h + i (L_1 + J_0 + … + J_q)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: conforming triangulations, edge classification and frames.
//! * [`basis`]: orthonormal modal basis on the reference triangle and
//!   quadrature rules.
//! * [`assembly`]: the sesquilinear forms, penalty configuration and the
//!   complex linear system.
//! * [`solver`]: sparse direct solution of the complex system.
//! * [`analysis`]: broken norms, Rellich identities, consistency and
//!   stability diagnostics.
//! * [`exact`]: closed-form solutions used by tests and studies.

pub mod analysis;
pub mod assembly;
pub mod basis;
mod error;
pub mod exact;
pub mod field;
pub mod mesh;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use analysis::{NormReport, RellichReport, StabilityReport};
pub use assembly::{ComplexSystem, DgSolution, FormMatrices, HelmholtzProblem, PenaltyConfig};
pub use basis::{QuadratureRule, ReferenceBasis};
pub use field::Field;
pub use mesh::{DomainSpec, EdgeKind, Mesh, Point};
pub use solver::SolveReport;
