//! Closed-form solutions: plane waves and global polynomials.

use num_complex::Complex64;
use rand::Rng;

use crate::field::Field;
use crate::mesh::Point;

/// `u = exp(i k d·x)` with `|d| = 1`. Solves the homogeneous Helmholtz
/// equation, so `f = 0` and `g = ik(d·n + 1) u`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave {
    pub k: f64,
    pub direction: Point,
}

impl PlaneWave {
    /// Default direction `(cos 0.3, sin 0.3)`, off the grid axes and diagonals.
    pub fn new(k: f64) -> Self {
        Self::with_angle(k, 0.3)
    }

    pub fn with_angle(k: f64, theta: f64) -> Self {
        Self { k, direction: [theta.cos(), theta.sin()] }
    }
}

impl Field for PlaneWave {
    fn partial(&self, _: usize, x: Point, a: usize, b: usize) -> Complex64 {
        let i = Complex64::i();
        let phase = self.k * (self.direction[0] * x[0] + self.direction[1] * x[1]);
        (i * self.k * self.direction[0]).powu(a as u32) * (i * self.k * self.direction[1]).powu(b as u32) * Complex64::cis(phase)
    }

    fn directional(&self, _: usize, x: Point, d: Point, j: usize) -> Complex64 {
        let i = Complex64::i();
        let phase = self.k * (self.direction[0] * x[0] + self.direction[1] * x[1]);
        (i * self.k * (self.direction[0] * d[0] + self.direction[1] * d[1])).powu(j as u32) * Complex64::cis(phase)
    }
}

/// `Σ c_{ab} x^a y^b`.
#[derive(Debug, Clone, Default)]
pub struct Polynomial {
    pub terms: Vec<(usize, usize, Complex64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(usize, usize, Complex64)>) -> Self {
        Self { terms }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![(0, 0, c)])
    }

    /// `(x² - x)(y² - y)`, which vanishes on the unit square's boundary.
    pub fn quartic_bubble() -> Self {
        let r = |v: f64| Complex64::new(v, 0.0);
        Self::new(vec![(2, 2, r(1.0)), (2, 1, r(-1.0)), (1, 2, r(-1.0)), (1, 1, r(1.0))])
    }

    /// Random complex coefficients in `[-1, 1]²` for every monomial of
    /// degree at most `p`.
    pub fn random<R: Rng>(p: usize, rng: &mut R) -> Self {
        let terms = (0..=p)
            .flat_map(|n| (0..=n).map(move |b| (n - b, b)))
            .map(|(a, b)| (a, b, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        Self::new(terms)
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|&(a, b, _)| a + b).max().unwrap_or(0)
    }

    /// `self · other`.
    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .flat_map(|&(a, b, c)| other.terms.iter().map(move |&(a2, b2, c2)| (a + a2, b + b2, c * c2)))
            .collect();
        Polynomial::new(terms)
    }
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

impl Field for Polynomial {
    fn partial(&self, _: usize, x: Point, a: usize, b: usize) -> Complex64 {
        self.terms
            .iter()
            .filter(|&&(ea, eb, _)| ea >= a && eb >= b)
            .map(|&(ea, eb, c)| {
                c * (falling(ea, a) * falling(eb, b) * x[0].powi((ea - a) as i32) * x[1].powi((eb - b) as i32))
            })
            .sum()
    }
}

/// `f = -Δu - k² u` for a field defined everywhere (element index ignored).
pub fn source_term(u: &dyn Field, k: f64, x: Point) -> Complex64 {
    -u.laplacian(0, x) - k * k * u.value(0, x)
}

/// `g = ∂u/∂n + i k u`.
pub fn robin_data(u: &dyn Field, k: f64, x: Point, n: Point) -> Complex64 {
    let g = u.gradient(0, x);
    g[0] * n[0] + g[1] * n[1] + Complex64::i() * k * u.value(0, x)
}
