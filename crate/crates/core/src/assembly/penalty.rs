use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Penalty parameters of `a_h^q`, uniform across edges.
///
/// `gamma[j]` multiplies `J_j` for `j = 0..=q`; `beta1` multiplies the
/// tangential-derivative jump penalty `L_1`. All penalties enter the form
/// with the imaginary unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub q: usize,
    pub sigma: f64,
    pub gamma: Vec<f64>,
    pub beta1: f64,
}

impl PenaltyConfig {
    pub fn new(gamma: Vec<f64>, beta1: f64) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::Config("at least γ_0 is required".into()));
        }
        let cfg = Self { q: gamma.len() - 1, sigma: 1.0, gamma, beta1 };
        cfg.check_values()?;
        Ok(cfg)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// The same parameters restricted to `J_0 … J_q`.
    pub fn truncated(&self, q: usize) -> Result<Self> {
        if q > self.q {
            return Err(Error::Config(format!("cannot truncate q = {} to {q}", self.q)));
        }
        Ok(Self { q, sigma: self.sigma, gamma: self.gamma[..=q].to_vec(), beta1: self.beta1 })
    }

    fn check_values(&self) -> Result<()> {
        if self.gamma.len() != self.q + 1 {
            return Err(Error::Config(format!("q = {} needs {} penalty values, got {}", self.q, self.q + 1, self.gamma.len())));
        }
        if let Some((j, g)) = self.gamma.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::Config(format!("γ_{j} must be positive, got {g}")));
        }
        if !(self.beta1.is_finite() && self.beta1 >= 0.0) {
            return Err(Error::Config(format!("β_1 must be nonnegative, got {}", self.beta1)));
        }
        if !self.sigma.is_finite() {
            return Err(Error::Config("σ must be finite".into()));
        }
        Ok(())
    }

    /// Checks the invariants against polynomial degree `p`.
    pub fn validate(&self, p: usize) -> Result<()> {
        self.check_values()?;
        if self.q > p {
            return Err(Error::Config(format!("q = {} exceeds the polynomial degree p = {p}", self.q)));
        }
        Ok(())
    }

    /// `λ = 1 + p / γ_0`.
    pub fn lambda(&self, p: usize) -> f64 {
        1.0 + p as f64 / self.gamma[0]
    }
}

/// Multipliers for the hidden constants of the penalty scalings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyScaling {
    pub gamma0: f64,
    pub ladder: f64,
    pub beta1: f64,
}

impl Default for PenaltyScaling {
    fn default() -> Self {
        Self { gamma0: 1.0, ladder: 1.0, beta1: 1.0 }
    }
}

/// Penalty parameters from the quasi-uniform stability scalings with unit
/// hidden constants.
pub fn auto_penalty(h: f64, p: usize, q: usize) -> Result<PenaltyConfig> {
    auto_penalty_scaled(h, p, q, PenaltyScaling::default())
}

/// [`auto_penalty`] with explicit constants:
///
/// * `q = p`: `γ_0 = c p^{7/3} h^{-2/3}`, `γ_j = c' p^{-10/3} h^{2/3} γ_{j-1}`;
/// * `q < p`: `γ_0 = c min{p^{(3q+1)/(q+1)} h^{-q/(q+1)}, p^{7/3} h^{-2/3}}`,
///   `γ_j = c' (γ_0 h / p⁴)² γ_{j-1}`, with `γ_q ≤ 1 / (γ_0 p^{2q-2})`;
///
/// then `γ_1 … γ_q` are scaled down together until `Σ p^{2j-1} γ_j ≤ 1`,
/// and `β_1 = c'' (h² / p⁴) γ_0`.
pub fn auto_penalty_scaled(h: f64, p: usize, q: usize, s: PenaltyScaling) -> Result<PenaltyConfig> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Config(format!("auto penalty needs 0 < h ≤ 1, got {h}")));
    }
    if p == 0 || q > p {
        return Err(Error::Config(format!("auto penalty needs 1 ≤ p and q ≤ p, got p = {p}, q = {q}")));
    }
    let pf = p as f64;
    let full = pf.powf(7.0 / 3.0) * h.powf(-2.0 / 3.0);
    let gamma0 = if q == p {
        s.gamma0 * full
    } else {
        let qf = q as f64;
        let partial = pf.powf((3.0 * qf + 1.0) / (qf + 1.0)) * h.powf(-qf / (qf + 1.0));
        s.gamma0 * partial.min(full)
    };

    let mut gamma = vec![gamma0];
    let ratio = if q == p { pf.powf(-10.0 / 3.0) * h.powf(2.0 / 3.0) } else { (gamma0 * h / pf.powi(4)).powi(2) };
    for j in 1..=q {
        let prev = gamma[j - 1];
        gamma.push(s.ladder * ratio * prev);
    }
    if q >= 1 && q < p {
        let cap = 1.0 / (gamma0 * pf.powi(2 * q as i32 - 2));
        gamma[q] = gamma[q].min(cap);
    }
    let budget: f64 = (1..=q).map(|j| pf.powi(2 * j as i32 - 1) * gamma[j]).sum();
    if budget > 1.0 {
        for g in &mut gamma[1..] {
            *g /= budget;
        }
    }
    let beta1 = s.beta1 * h * h / pf.powi(4) * gamma0;
    PenaltyConfig::new(gamma, beta1)
}
