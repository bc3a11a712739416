use std::fs::File;
use std::io::BufReader;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use hpdg_core::analysis::{self, IdentityReport, StabilityReport};
use hpdg_core::assembly::{assemble_system_with, AssemblyOptions};
use hpdg_core::mesh::{build_structured_mesh, read_mesh};
use hpdg_core::solver::{solve, DEFAULT_TOLERANCE};
use hpdg_core::{DomainSpec, HelmholtzProblem, Mesh, ReferenceBasis};
use serde::Serialize;

use crate::spec::{ExactSolution, Mode, StudySpec};

/// One line of a convergence or sweep table. Field order is the CSV column
/// order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k: f64,
    pub p: usize,
    pub q: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_l2: f64,
    pub err_1hq: f64,
    pub eoc_l2: Option<f64>,
    pub eoc_1hq: Option<f64>,
    pub csta_ratio: f64,
    pub residual: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub row: ConvergenceRow,
    pub nx: Option<usize>,
    pub stability: StabilityReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyRecord {
    pub nx: Option<usize>,
    pub identities: IdentityReport,
    pub consistency: f64,
    pub orthogonality: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct C0Point {
    pub p: usize,
    pub c: f64,
    pub k: f64,
    pub nx: usize,
    pub energy_ratio: f64,
    pub l2_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct C0Estimate {
    pub p: usize,
    /// Largest tested constant whose stability ratio stays within 2× of
    /// the ratio at the smallest constant.
    pub c0: f64,
    pub plateau: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Table { mode: Mode, runs: Vec<RunRecord> },
    Verify { runs: Vec<VerifyRecord>, passed: bool },
    C0 { points: Vec<C0Point>, estimates: Vec<C0Estimate> },
}

impl Report {
    /// False only when an exact identity check failed.
    pub fn passed(&self) -> bool {
        match self {
            Report::Verify { passed, .. } => *passed,
            _ => true,
        }
    }
}

/// A mesh together with the structured resolution it came from, if any.
struct MeshCase {
    nx: Option<usize>,
    mesh: Mesh,
}

fn domain() -> DomainSpec {
    DomainSpec::unit_square()
}

fn structured(nx: usize) -> Result<MeshCase> {
    let mesh = build_structured_mesh(&domain(), nx, nx).with_context(|| format!("building the {nx}×{nx} mesh"))?;
    Ok(MeshCase { nx: Some(nx), mesh })
}

fn meshes(spec: &StudySpec) -> Result<Vec<MeshCase>> {
    if let Some(path) = &spec.mesh_file {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mesh = read_mesh(BufReader::new(file), Some(&domain())).with_context(|| format!("reading {}", path.display()))?;
        return Ok(vec![MeshCase { nx: None, mesh }]);
    }
    spec.nx.iter().map(|&nx| structured(nx)).collect()
}

fn eoc(prev: Option<(f64, f64)>, h: f64, err: f64) -> Option<f64> {
    let (h0, e0) = prev?;
    let ratio = h0 / h;
    if (ratio - 2.0).abs() < 1e-12 {
        Some((e0 / err).log2())
    } else {
        Some((e0 / err).ln() / ratio.ln())
    }
}

/// Solves one manufactured problem and evaluates errors and stability.
fn solve_case(spec: &StudySpec, k: f64, p: usize, case: &MeshCase) -> Result<RunRecord> {
    let start = Instant::now();
    let q = spec.q.resolve(p)?;
    let mesh = &case.mesh;
    let basis = ReferenceBasis::new(p)?;
    let cfg = spec.penalty.resolve(mesh.h_max(), p, q, spec.sigma)?;
    let exact = ExactSolution::new(spec.exact, k);
    let problem = HelmholtzProblem::from_exact(k, domain(), exact.clone())?;
    let opts = AssemblyOptions { quad_bump: spec.quad_bump };
    let system = assemble_system_with(&problem, mesh, &basis, &cfg, opts)?;
    let (solution, report) = solve(&system, DEFAULT_TOLERANCE).with_context(|| format!("solving k = {k}, p = {p}, h = {}", mesh.h_max()))?;
    let err = analysis::error_vs_exact(&solution, &exact, mesh, &basis, &cfg)?;
    let stability = analysis::stability_report(&solution, &problem, mesh, &basis, &cfg)?;
    let row = ConvergenceRow {
        k,
        p,
        q,
        h: mesh.h_max(),
        dofs: system.n_dofs(),
        err_l2: err.l2,
        err_1hq: err.norm_1hq,
        eoc_l2: None,
        eoc_1hq: None,
        csta_ratio: stability.ratio,
        residual: report.residual,
        seconds: if spec.timing { start.elapsed().as_secs_f64() } else { 0.0 },
    };
    Ok(RunRecord { row, nx: case.nx, stability })
}

fn table(spec: &StudySpec) -> Result<Vec<RunRecord>> {
    let mut runs = Vec::new();
    for &k in &spec.k {
        for &p in &spec.p {
            let cases = match &spec.rule {
                Some(rule) if spec.mode != Mode::Converge => vec![structured(rule.cells(rule.constants()[0], k, p))?],
                _ => meshes(spec)?,
            };
            let mut prev: Option<(f64, f64, f64)> = None;
            for case in &cases {
                let mut run = solve_case(spec, k, p, case)?;
                if spec.mode == Mode::Converge {
                    let r = &mut run.row;
                    r.eoc_l2 = eoc(prev.map(|(h, e, _)| (h, e)), r.h, r.err_l2);
                    r.eoc_1hq = eoc(prev.map(|(h, _, e)| (h, e)), r.h, r.err_1hq);
                    prev = Some((r.h, r.err_l2, r.err_1hq));
                }
                runs.push(run);
            }
        }
    }
    Ok(runs)
}

fn verify(spec: &StudySpec) -> Result<Report> {
    let mut runs = Vec::new();
    let opts = AssemblyOptions { quad_bump: spec.quad_bump };
    for &p in &spec.p {
        let q = spec.q.resolve(p)?;
        let basis = ReferenceBasis::new(p)?;
        for case in meshes(spec)? {
            let mesh = &case.mesh;
            let cfg = spec.penalty.resolve(mesh.h_max(), p, q, spec.sigma)?;
            let identities = analysis::identity_suite(mesh, &domain(), &basis, &cfg, spec.samples, spec.seed)?;
            let k = spec.k[0];
            let exact = ExactSolution::new(spec.exact, k);
            let problem = HelmholtzProblem::from_exact(k, domain(), exact.clone())?;
            let consistency = analysis::consistency_residual(&exact, &problem, mesh, &basis, &cfg, opts)?;
            let orthogonality = analysis::projection_check(&exact, mesh, &basis, &cfg, k, opts)?.orthogonality;
            let passed = identities.passes() && orthogonality <= 1e-10;
            runs.push(VerifyRecord { nx: case.nx, identities, consistency, orthogonality, passed });
        }
    }
    let passed = runs.iter().all(|r| r.passed);
    Ok(Report::Verify { runs, passed })
}

/// Sweeps the mesh-condition constants of `spec.rule` and estimates, per
/// degree, the largest constant on the stability plateau.
pub fn estimate_c0(spec: &StudySpec) -> Result<Report> {
    let rule = spec.rule.clone().context("estimate-c0 needs --rule")?;
    let mut constants = rule.constants().to_vec();
    ensure!(constants.len() >= 3, "need ≥ 3 condition values, got {}", constants.len());
    constants.sort_by(f64::total_cmp);
    let mut points = Vec::new();
    let mut estimates = Vec::new();
    for &p in &spec.p {
        let mut worst = Vec::new();
        for &c in &constants {
            let mut ratio = 0.0f64;
            for &k in &spec.k {
                let nx = rule.cells(c, k, p);
                let run = solve_case(spec, k, p, &structured(nx)?)?;
                ratio = ratio.max(run.stability.energy_ratio);
                points.push(C0Point { p, c, k, nx, energy_ratio: run.stability.energy_ratio, l2_ratio: run.stability.l2_ratio });
            }
            worst.push(ratio);
        }
        let plateau = worst[0];
        let c0 = constants.iter().zip(&worst).take_while(|(_, r)| **r <= 2.0 * plateau).map(|(c, _)| *c).last().unwrap_or(constants[0]);
        estimates.push(C0Estimate { p, c0, plateau });
    }
    Ok(Report::C0 { points, estimates })
}

/// Runs a study. Outputs depend only on the spec (and its seed) unless
/// timing is enabled.
pub fn run(spec: &StudySpec) -> Result<Report> {
    spec.validate()?;
    match spec.mode {
        Mode::Solve | Mode::Converge | Mode::Ksweep => Ok(Report::Table { mode: spec.mode, runs: table(spec)? }),
        Mode::Verify => verify(spec),
        Mode::EstimateC0 => estimate_c0(spec),
    }
}
