use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::ValueEnum;
use hpdg_core::assembly::{auto_penalty, PenaltyConfig};
use hpdg_core::exact::{PlaneWave, Polynomial};
use hpdg_core::{Complex64, Field, Point};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Verify,
    Converge,
    Ksweep,
    EstimateC0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Which penalty ladder depth to use for each degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum QRule {
    EqualsP,
    Fixed(usize),
}

impl QRule {
    pub fn resolve(self, p: usize) -> Result<usize> {
        match self {
            QRule::EqualsP => Ok(p),
            QRule::Fixed(q) => {
                ensure!(q <= p, "q = {q} exceeds p = {p}");
                Ok(q)
            }
        }
    }
}

impl FromStr for QRule {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "p" {
            return Ok(QRule::EqualsP);
        }
        Ok(QRule::Fixed(s.parse().with_context(|| format!("--q expects `p` or an integer, got `{s}`"))?))
    }
}

/// How the mesh size follows the wave number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MeshRule {
    /// `k h = C`
    Kh(Vec<f64>),
    /// `k³ h² / p = C`
    K3h2p(Vec<f64>),
}

impl MeshRule {
    pub fn constants(&self) -> &[f64] {
        match self {
            MeshRule::Kh(c) | MeshRule::K3h2p(c) => c,
        }
    }

    /// Cells per side of the structured unit-square mesh for constant `c`.
    /// The mesh size is the cell diagonal `√2 / nx`, rounded down to the
    /// nearest admissible value.
    pub fn cells(&self, c: f64, k: f64, p: usize) -> usize {
        let h = match self {
            MeshRule::Kh(_) => c / k,
            MeshRule::K3h2p(_) => (c * p as f64 / k.powi(3)).sqrt(),
        };
        (2f64.sqrt() / h).ceil().max(1.0) as usize
    }
}

impl FromStr for MeshRule {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, values) = s.split_once('=').ok_or_else(|| anyhow!("--rule expects kh=C or k3h2p=C, got `{s}`"))?;
        let values = parse_list::<f64>(values).context("--rule constants")?;
        ensure!(values.iter().all(|c| *c > 0.0), "--rule constants must be positive");
        match name {
            "kh" => Ok(MeshRule::Kh(values)),
            "k3h2p" => Ok(MeshRule::K3h2p(values)),
            other => bail!("unknown mesh rule `{other}`; expected kh or k3h2p"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PenaltyMode {
    Auto,
    /// `γ_0, γ_1, …` as given; missing `γ_j` default to 1 and a missing `β_1`
    /// to 0.
    Explicit { gamma: Vec<Option<f64>>, beta1: f64 },
}

impl PenaltyMode {
    pub fn resolve(&self, h: f64, p: usize, q: usize, sigma: f64) -> Result<PenaltyConfig> {
        let cfg = match self {
            PenaltyMode::Auto => auto_penalty(h, p, q)?,
            PenaltyMode::Explicit { gamma, beta1 } => {
                let g = (0..=q).map(|j| gamma.get(j).copied().flatten().unwrap_or(1.0)).collect();
                PenaltyConfig::new(g, *beta1)?
            }
        };
        Ok(cfg.with_sigma(sigma))
    }
}

impl FromStr for PenaltyMode {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(PenaltyMode::Auto);
        }
        let mut gamma: Vec<Option<f64>> = Vec::new();
        let mut beta1 = 0.0;
        for item in s.split(',') {
            let (key, value) = item.split_once('=').ok_or_else(|| anyhow!("penalty entry `{item}` is not key=value"))?;
            let value: f64 = value.trim().parse().with_context(|| format!("penalty value in `{item}`"))?;
            match key.trim() {
                "b1" => beta1 = value,
                k if k.starts_with('g') => {
                    let j: usize = k[1..].parse().with_context(|| format!("penalty key `{k}`"))?;
                    if gamma.len() <= j {
                        gamma.resize(j + 1, None);
                    }
                    gamma[j] = Some(value);
                }
                k => bail!("unknown penalty key `{k}`"),
            }
        }
        ensure!(gamma.first().copied().flatten().is_some(), "explicit penalties need g0");
        Ok(PenaltyMode::Explicit { gamma, beta1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExactId {
    /// Plane wave with direction angle in radians.
    PlaneWave(f64),
    PolyQuartic,
}

impl FromStr for ExactId {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "planewave" => Ok(ExactId::PlaneWave(0.3)),
            None if s == "polyquartic" => Ok(ExactId::PolyQuartic),
            Some(("planewave", angle)) => Ok(ExactId::PlaneWave(angle.parse().context("plane wave angle")?)),
            _ => bail!("unknown exact solution `{s}`; expected planewave, planewave:<angle> or polyquartic"),
        }
    }
}

impl fmt::Display for ExactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactId::PlaneWave(a) => write!(f, "planewave:{a}"),
            ExactId::PolyQuartic => write!(f, "polyquartic"),
        }
    }
}

/// A closed-form solution from the catalog.
#[derive(Debug, Clone)]
pub enum ExactSolution {
    PlaneWave(PlaneWave),
    Polynomial(Polynomial),
}

impl ExactSolution {
    pub fn new(id: ExactId, k: f64) -> Self {
        match id {
            ExactId::PlaneWave(angle) => ExactSolution::PlaneWave(PlaneWave::with_angle(k, angle)),
            ExactId::PolyQuartic => ExactSolution::Polynomial(Polynomial::quartic_bubble()),
        }
    }
}

impl Field for ExactSolution {
    fn partial(&self, element: usize, x: Point, a: usize, b: usize) -> Complex64 {
        match self {
            ExactSolution::PlaneWave(u) => u.partial(element, x, a, b),
            ExactSolution::Polynomial(u) => u.partial(element, x, a, b),
        }
    }

    fn directional(&self, element: usize, x: Point, d: Point, j: usize) -> Complex64 {
        match self {
            ExactSolution::PlaneWave(u) => u.directional(element, x, d, j),
            ExactSolution::Polynomial(u) => u.directional(element, x, d, j),
        }
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    let v = s.split(',').map(|x| x.trim().parse::<T>().with_context(|| format!("bad list entry `{x}`"))).collect::<Result<Vec<_>>>()?;
    ensure!(!v.is_empty(), "empty list");
    Ok(v)
}

/// Fully resolved description of a study.
#[derive(Debug, Clone, Serialize)]
pub struct StudySpec {
    pub mode: Mode,
    pub k: Vec<f64>,
    pub p: Vec<usize>,
    pub q: QRule,
    pub nx: Vec<usize>,
    pub rule: Option<MeshRule>,
    pub penalty: PenaltyMode,
    pub sigma: f64,
    pub exact: ExactId,
    pub mesh_file: Option<PathBuf>,
    pub seed: u64,
    pub quad_bump: usize,
    pub samples: usize,
    /// Record wall-clock times; off by default so reports are reproducible.
    pub timing: bool,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            mode: Mode::Solve,
            k: vec![5.0],
            p: vec![1],
            q: QRule::EqualsP,
            nx: vec![8],
            rule: None,
            penalty: PenaltyMode::Auto,
            sigma: 1.0,
            exact: ExactId::PlaneWave(0.3),
            mesh_file: None,
            seed: 0,
            quad_bump: 0,
            samples: 50,
            timing: false,
        }
    }
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.k.is_empty() && !self.p.is_empty() && !self.nx.is_empty(), "k, p and nx lists must be nonempty");
        ensure!(self.k.iter().all(|k| k.is_finite() && *k > 0.0), "wave numbers must be positive");
        ensure!(self.nx.iter().all(|n| *n > 0), "nx must be positive");
        for &p in &self.p {
            self.q.resolve(p)?;
        }
        if self.mode == Mode::EstimateC0 {
            let rule = self.rule.as_ref().ok_or_else(|| anyhow!("estimate-c0 needs --rule with several constants"))?;
            ensure!(rule.constants().len() >= 3, "need ≥ 3 condition values, got {}", rule.constants().len());
        }
        if let Some(rule) = &self.rule {
            ensure!(self.mode == Mode::EstimateC0 || rule.constants().len() == 1, "--rule takes a single constant outside estimate-c0");
        }
        Ok(())
    }
}
