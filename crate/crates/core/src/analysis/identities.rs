//! Exact algebraic properties of `a_h^q` checked on sampled discrete
//! functions.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{jumps_and_averages, norms, rellich_check};
use crate::assembly::{Assembler, PenaltyConfig};
use crate::basis::{edge_rule, ReferenceBasis};
use crate::field::{DgFunction, Field};
use crate::mesh::{DomainSpec, Mesh};
use crate::sparse::CsrMatrix;
use crate::Result;

/// Coefficients with real and imaginary parts uniform in `[-1, 1)`.
pub fn random_dg_coefficients<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// `max |A - Aᵀ| / max |A|` (plain transpose, no conjugation).
pub fn symmetry_defect(a: &CsrMatrix<Complex64>) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let d = CsrMatrix::linear_combination([(one, a), (-one, &a.transpose())]);
    let scale = a.max_abs();
    if scale > 0.0 {
        d.max_abs() / scale
    } else {
        0.0
    }
}

/// `max |A^q - A^{q-1} - i J_q| / max |A^q|`; zero when `q = 0`.
pub fn q_nesting_defect(mesh: &Mesh, basis: &ReferenceBasis, cfg: &PenaltyConfig) -> Result<f64> {
    if cfg.q == 0 {
        return Ok(0.0);
    }
    let full = Assembler::new(mesh, basis, cfg)?.matrices()?;
    let lower_cfg = cfg.truncated(cfg.q - 1)?;
    let lower = Assembler::new(mesh, basis, &lower_cfg)?.matrices()?;
    let (aq, aq1) = (full.a_hq(), lower.a_hq());
    let jq = full.jumps[cfg.q].to_complex();
    let one = Complex64::new(1.0, 0.0);
    let d = CsrMatrix::linear_combination([(one, &aq), (-one, &aq1), (-Complex64::i(), &jq)]);
    Ok(d.max_abs() / aq.max_abs())
}

/// Real and imaginary parts of `a_h^q(v, v)` from the assembled matrix,
/// compared with the same quantities accumulated directly from traces of `v`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitCheck {
    pub re_form: f64,
    /// `|v|²_{1,h} - 2Re Σ_{E^{ID}} ⟨{∂v/∂n}, [v]⟩`
    pub re_identity: f64,
    pub im_form: f64,
    /// `L_1(v, v) + Σ_j J_j(v, v)`
    pub im_identity: f64,
    pub re_error: f64,
    pub im_error: f64,
    /// `‖v‖²_{1,h,q}`
    pub norm_sq: f64,
    pub semi_sq: f64,
    pub triple_sq: f64,
}

/// `Σ_{E^{ID}} ⟨{∂v/∂n}, [v]⟩_e`.
fn flux_pairing(v: &dyn Field, mesh: &Mesh, exactness: usize) -> Complex64 {
    let line = edge_rule(exactness);
    let mut s = Complex64::new(0.0, 0.0);
    for e in mesh.edges().iter().filter(|e| e.kind.in_id()) {
        for (t, w) in line.iter() {
            let (jump, avg) = jumps_and_averages(v, mesh.edge_point(e, t[0]), e, 1);
            s += avg[2] * jump[0].conj() * (w * e.length);
        }
    }
    s
}

pub fn split_check(a: &CsrMatrix<Complex64>, coeffs: &[Complex64], mesh: &Mesh, basis: &ReferenceBasis, cfg: &PenaltyConfig) -> Result<SplitCheck> {
    let p = basis.degree();
    let exactness = 2 * p + 2;
    let v = DgFunction::new(mesh, basis, coeffs)?;
    let form = a.sesquilinear(coeffs, coeffs);
    let nr = norms(&v, mesh, p, cfg, exactness)?;
    let flux = flux_pairing(&v, mesh, exactness);
    let semi_sq = nr.h1_semi * nr.h1_semi;
    let re_identity = semi_sq - 2.0 * flux.re;
    let im_identity = nr.penalty();
    let re_scale = form.re.abs().max(semi_sq + 2.0 * flux.norm());
    let im_scale = form.im.abs().max(im_identity);
    let rel = |d: f64, s: f64| if s > 0.0 { d / s } else { d };
    Ok(SplitCheck {
        re_form: form.re,
        re_identity,
        im_form: form.im,
        im_identity,
        re_error: rel((form.re - re_identity).abs(), re_scale),
        im_error: rel((form.im - im_identity).abs(), im_scale),
        norm_sq: nr.norm_1hq * nr.norm_1hq,
        semi_sq,
        triple_sq: nr.triple * nr.triple,
    })
}

/// Smallest `c ≥ 0` with `Re a(v,v) + c Im a(v,v) ≥ ½‖v‖²_{1,h,q}` on every
/// sample; infinite if some sample has `Im a = 0` and violates the bound.
pub fn coercivity_constant(samples: &[SplitCheck]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let deficit = 0.5 * s.norm_sq - s.re_form;
            if deficit <= 0.0 {
                0.0
            } else if s.im_form > 0.0 {
                deficit / s.im_form
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub degree: usize,
    pub q: usize,
    pub n_elements: usize,
    pub samples: usize,
    /// Worst relative residual of each Rellich identity over the samples.
    pub rellich: [f64; 3],
    pub split_re: f64,
    pub split_im: f64,
    /// Smallest `Im a(v, v)` over the samples.
    pub min_imaginary: f64,
    pub symmetry: f64,
    pub nesting: f64,
    /// `|v|_{1,h} ≤ ‖v‖_{1,h,q} ≤ ⦀v⦀` held on every sample.
    pub norm_chain: bool,
    pub coercivity: f64,
}

impl IdentityReport {
    pub fn passes(&self) -> bool {
        self.rellich.iter().all(|r| *r <= 1e-10)
            && self.split_re <= 1e-11
            && self.split_im <= 1e-11
            && self.min_imaginary >= -1e-12
            && self.symmetry <= 1e-12
            && self.nesting <= 1e-12
            && self.norm_chain
    }
}

/// Runs every identity check on `samples` random functions of `V_h^p`.
/// The matrix symmetry check is meaningful only for `σ = 1`.
pub fn identity_suite(
    mesh: &Mesh,
    domain: &DomainSpec,
    basis: &ReferenceBasis,
    cfg: &PenaltyConfig,
    samples: usize,
    seed: u64,
) -> Result<IdentityReport> {
    let p = basis.degree();
    let a = Assembler::new(mesh, basis, cfg)?.matrices()?.a_hq();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mesh.n_elements() * basis.dim();
    let mut rellich = [0.0f64; 3];
    let mut checks = Vec::with_capacity(samples);
    for _ in 0..samples {
        let coeffs = random_dg_coefficients(n, &mut rng);
        let v = DgFunction::new(mesh, basis, &coeffs)?;
        let r = rellich_check(&v, mesh, domain, 2 * p + 3)?;
        for (acc, x) in rellich.iter_mut().zip(r.max_relative) {
            *acc = acc.max(x);
        }
        checks.push(split_check(&a, &coeffs, mesh, basis, cfg)?);
    }
    let tol = 1e-12;
    let norm_chain = checks.iter().all(|c| c.semi_sq <= c.norm_sq * (1.0 + tol) && c.norm_sq <= c.triple_sq * (1.0 + tol));
    Ok(IdentityReport {
        degree: p,
        q: cfg.q,
        n_elements: mesh.n_elements(),
        samples,
        rellich,
        split_re: checks.iter().map(|c| c.re_error).fold(0.0, f64::max),
        split_im: checks.iter().map(|c| c.im_error).fold(0.0, f64::max),
        min_imaginary: checks.iter().map(|c| c.im_form).fold(f64::INFINITY, f64::min),
        symmetry: symmetry_defect(&a),
        nesting: q_nesting_defect(mesh, basis, cfg)?,
        norm_chain,
        coercivity: coercivity_constant(&checks),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::auto_penalty;
    use crate::mesh::build_structured_mesh;

    #[test]
    fn suite_passes_on_a_small_mesh() {
        let d = DomainSpec::unit_square();
        let mesh = build_structured_mesh(&d, 3, 3).unwrap();
        for p in 1..=3 {
            let basis = ReferenceBasis::new(p).unwrap();
            let cfg = auto_penalty(mesh.h_max(), p, p).unwrap();
            let r = identity_suite(&mesh, &d, &basis, &cfg, 5, 7).unwrap();
            assert!(r.passes(), "{r:?}");
            assert!(r.coercivity.is_finite());
        }
    }

    #[test]
    fn suite_with_a_hole() {
        let d = DomainSpec::unit_square().with_hole([0.25, 0.25], [0.75, 0.75]).unwrap();
        let mesh = build_structured_mesh(&d, 4, 4).unwrap();
        let basis = ReferenceBasis::new(2).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 2, 1).unwrap();
        let r = identity_suite(&mesh, &d, &basis, &cfg, 5, 3).unwrap();
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn asymmetric_variant_is_detected() {
        let mesh = build_structured_mesh(&DomainSpec::unit_square(), 2, 2).unwrap();
        let basis = ReferenceBasis::new(1).unwrap();
        let cfg = auto_penalty(mesh.h_max(), 1, 1).unwrap().with_sigma(-1.0);
        let a = Assembler::new(&mesh, &basis, &cfg).unwrap().matrices().unwrap().a_hq();
        assert!(symmetry_defect(&a) > 1e-3);
    }

    #[test]
    fn coercivity_constant_cases() {
        let s = |re: f64, im: f64, n: f64| SplitCheck {
            re_form: re,
            re_identity: re,
            im_form: im,
            im_identity: im,
            re_error: 0.0,
            im_error: 0.0,
            norm_sq: n,
            semi_sq: n,
            triple_sq: n,
        };
        assert_eq!(coercivity_constant(&[s(1.0, 0.0, 1.0)]), 0.0);
        assert_eq!(coercivity_constant(&[s(0.0, 2.0, 2.0)]), 0.5);
        assert!(coercivity_constant(&[s(0.0, 0.0, 2.0)]).is_infinite());
    }
}
