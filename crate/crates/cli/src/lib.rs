//! Driver for single solves, identity verification, convergence studies and
//! wave-number sweeps of the hp-IPDG Helmholtz discretization.

pub mod output;
pub mod spec;
pub mod study;

pub use output::write_report;
pub use spec::{ExactId, Format, MeshRule, Mode, PenaltyMode, QRule, StudySpec};
pub use study::{estimate_c0, run, C0Estimate, ConvergenceRow, Report, RunRecord};
