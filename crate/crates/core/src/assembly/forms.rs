//! Element and edge integrals of the forms making up `a_h^q`, the mass form
//! and the Robin boundary form.
//!
//! Every edge form is a pairing `ω_e ⟨A[u], B[v]⟩_e` where `A`, `B` are a
//! jump or an average of a trace quantity (value, tangential derivative or
//! `j`-th normal derivative). The same kernel produces the matrix entries
//! `form(φ_j, φ_i)` and the action `form(u, φ_i)` on a given field.

use num_complex::Complex64;

use super::PenaltyConfig;
use crate::basis::{edge_rule, triangle_rule, BasisTable, QuadratureRule, ReferenceBasis};
use crate::field::{require_order, Field};
use crate::mesh::{Edge, EdgeKind, Mesh, Point};
use crate::sparse::{CsrMatrix, TripletList};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    Value,
    Tangential,
    /// `∂^j / ∂n_e^j`, `j ≥ 1`.
    Normal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Combine {
    Jump,
    Average,
}

impl Combine {
    /// Weight of side `s` (0 = owner, 1 = neighbor) on an edge with
    /// `nsides` adjacent elements.
    #[inline]
    fn coefficient(self, s: usize, nsides: usize) -> f64 {
        match (self, nsides) {
            (_, 1) => 1.0,
            (Combine::Jump, _) => {
                if s == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
            (Combine::Average, _) => 0.5,
        }
    }
}

/// Which edges a form sums over.
#[derive(Debug, Clone, Copy)]
enum EdgeSet {
    /// `E_h^{ID}`
    InteriorDirichlet,
    /// `E_h^I`
    Interior,
    /// `E_h^R`
    Robin,
}

impl EdgeSet {
    fn contains(self, kind: EdgeKind) -> bool {
        match self {
            EdgeSet::InteriorDirichlet => kind.in_id(),
            EdgeSet::Interior => kind == EdgeKind::Interior,
            EdgeSet::Robin => kind == EdgeKind::Robin,
        }
    }
}

/// Slot of each form in the assembled collections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Stiffness,
    Flux,
    FluxAdjoint,
    L1,
    Jump(usize),
    Mass,
    Robin,
}

struct EdgeForm {
    slot: Slot,
    set: EdgeSet,
    trial: (Quantity, Combine),
    test: (Quantity, Combine),
    /// `ω_e` as a function of `h_e`.
    weight: Box<dyn Fn(f64) -> f64 + Sync>,
}

fn edge_forms(cfg: &PenaltyConfig, p: usize) -> Vec<EdgeForm> {
    use Combine::*;
    use Quantity::*;
    let pf = p as f64;
    let mut forms = vec![
        // -⟨{∂u/∂n}, [v]⟩
        EdgeForm {
            slot: Slot::Flux,
            set: EdgeSet::InteriorDirichlet,
            trial: (Normal(1), Average),
            test: (Value, Jump),
            weight: Box::new(|_| -1.0),
        },
        // -⟨[u], {∂v/∂n}⟩, scaled by σ when combined
        EdgeForm {
            slot: Slot::FluxAdjoint,
            set: EdgeSet::InteriorDirichlet,
            trial: (Value, Jump),
            test: (Normal(1), Average),
            weight: Box::new(|_| -1.0),
        },
        EdgeForm {
            slot: Slot::Robin,
            set: EdgeSet::Robin,
            trial: (Value, Average),
            test: (Value, Average),
            weight: Box::new(|_| 1.0),
        },
    ];
    let beta1 = cfg.beta1;
    if beta1 > 0.0 {
        forms.push(EdgeForm {
            slot: Slot::L1,
            set: EdgeSet::InteriorDirichlet,
            trial: (Tangential, Jump),
            test: (Tangential, Jump),
            weight: Box::new(move |h| beta1 * pf / h),
        });
    }
    let g0 = cfg.gamma[0];
    forms.push(EdgeForm {
        slot: Slot::Jump(0),
        set: EdgeSet::InteriorDirichlet,
        trial: (Value, Jump),
        test: (Value, Jump),
        weight: Box::new(move |h| g0 * pf / h),
    });
    for j in 1..=cfg.q {
        let gj = cfg.gamma[j];
        forms.push(EdgeForm {
            slot: Slot::Jump(j),
            set: EdgeSet::Interior,
            trial: (Normal(j), Jump),
            test: (Normal(j), Jump),
            weight: Box::new(move |h| gj * (h / pf).powi(2 * j as i32 - 1)),
        });
    }
    forms
}

/// The separately assembled real matrices; entry `(i, j)` is
/// `form(φ_j, φ_i)`, so `form(u, v) = vᴴ A u`.
#[derive(Debug, Clone)]
pub struct FormMatrices {
    /// `Σ_K (∇u, ∇v)_K`
    pub stiffness: CsrMatrix<f64>,
    /// `-Σ_{E^{ID}} ⟨{∂u/∂n}, [v]⟩`
    pub flux: CsrMatrix<f64>,
    /// `-Σ_{E^{ID}} ⟨[u], {∂v/∂n}⟩`
    pub flux_adjoint: CsrMatrix<f64>,
    pub l1: CsrMatrix<f64>,
    /// `J_0, …, J_q`
    pub jumps: Vec<CsrMatrix<f64>>,
    /// `(u, v)`
    pub mass: CsrMatrix<f64>,
    /// `⟨u, v⟩_{Γ_R}`
    pub robin: CsrMatrix<f64>,
    pub sigma: f64,
}

impl FormMatrices {
    pub fn b_h(&self) -> CsrMatrix<f64> {
        CsrMatrix::linear_combination([(1.0, &self.stiffness), (1.0, &self.flux), (self.sigma, &self.flux_adjoint)])
    }

    /// `L_1 + Σ_j J_j`
    pub fn penalty(&self) -> CsrMatrix<f64> {
        CsrMatrix::linear_combination(std::iter::once((1.0, &self.l1)).chain(self.jumps.iter().map(|j| (1.0, j))))
    }

    /// `a_h^q = b_h + i (L_1 + Σ_j J_j)`
    pub fn a_hq(&self) -> CsrMatrix<Complex64> {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        let b = self.b_h().to_complex();
        let pen = self.penalty().to_complex();
        CsrMatrix::linear_combination([(one, &b), (i, &pen)])
    }

    /// `a_h^q - k² M + i k B`
    pub fn helmholtz(&self, k: f64) -> CsrMatrix<Complex64> {
        let a = self.a_hq();
        let m = self.mass.to_complex();
        let r = self.robin.to_complex();
        CsrMatrix::linear_combination([
            (Complex64::new(1.0, 0.0), &a),
            (Complex64::new(-k * k, 0.0), &m),
            (Complex64::new(0.0, k), &r),
        ])
    }

    /// `a_h^q + i k B`, the elliptic projection operator.
    pub fn projection(&self, k: f64) -> CsrMatrix<Complex64> {
        let a = self.a_hq();
        let r = self.robin.to_complex();
        CsrMatrix::linear_combination([(Complex64::new(1.0, 0.0), &a), (Complex64::new(0.0, k), &r)])
    }
}

/// The forms applied to a fixed trial field: entry `i` is `form(u, φ_i)`.
#[derive(Debug, Clone)]
pub struct FormVectors {
    pub stiffness: Vec<Complex64>,
    pub flux: Vec<Complex64>,
    pub flux_adjoint: Vec<Complex64>,
    pub l1: Vec<Complex64>,
    pub jumps: Vec<Vec<Complex64>>,
    pub mass: Vec<Complex64>,
    pub robin: Vec<Complex64>,
    pub sigma: f64,
}

impl FormVectors {
    /// `a_h^q(u, φ_i)`
    pub fn a_hq(&self) -> Vec<Complex64> {
        let i = Complex64::i();
        (0..self.stiffness.len())
            .map(|r| {
                let pen = self.l1[r] + self.jumps.iter().map(|j| j[r]).sum::<Complex64>();
                self.stiffness[r] + self.flux[r] + self.flux_adjoint[r] * self.sigma + i * pen
            })
            .collect()
    }
}

/// Precomputed quadrature and basis tables for one mesh, basis and penalty
/// configuration.
pub struct Assembler<'a> {
    mesh: &'a Mesh,
    basis: &'a ReferenceBasis,
    cfg: &'a PenaltyConfig,
    volume: QuadratureRule,
    edge: QuadratureRule,
    vol_values: BasisTable,
    vol_dx: BasisTable,
    vol_dy: BasisTable,
    forms: Vec<EdgeForm>,
}

/// Basis traces of one side of an edge at every edge quadrature point:
/// `traces[qp][quantity][i]` with quantities `[value, ∂_τ, ∂_n, …, ∂_n^m]`.
type SideTraces = Vec<Vec<Vec<f64>>>;

#[inline]
fn quantity_index(q: Quantity) -> usize {
    match q {
        Quantity::Value => 0,
        Quantity::Tangential => 1,
        Quantity::Normal(j) => 1 + j,
    }
}

impl<'a> Assembler<'a> {
    /// Uses quadrature of exactness `2p + 2`.
    pub fn new(mesh: &'a Mesh, basis: &'a ReferenceBasis, cfg: &'a PenaltyConfig) -> Result<Self> {
        Self::with_exactness(mesh, basis, cfg, 2 * basis.degree() + 2)
    }

    pub fn with_exactness(mesh: &'a Mesh, basis: &'a ReferenceBasis, cfg: &'a PenaltyConfig, exactness: usize) -> Result<Self> {
        cfg.validate(basis.degree())?;
        let volume = triangle_rule(exactness);
        let edge = edge_rule(exactness);
        let vol_values = basis.eval(&volume.points, (0, 0))?;
        let vol_dx = basis.eval(&volume.points, (1, 0))?;
        let vol_dy = basis.eval(&volume.points, (0, 1))?;
        let forms = edge_forms(cfg, basis.degree());
        Ok(Self { mesh, basis, cfg, volume, edge, vol_values, vol_dx, vol_dy, forms })
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_elements() * self.basis.dim()
    }

    fn slot_index(&self, slot: Slot) -> usize {
        match slot {
            Slot::Stiffness => 0,
            Slot::Flux => 1,
            Slot::FluxAdjoint => 2,
            Slot::L1 => 3,
            Slot::Mass => 4,
            Slot::Robin => 5,
            Slot::Jump(j) => 6 + j,
        }
    }

    fn n_slots(&self) -> usize {
        7 + self.cfg.q
    }

    /// Highest normal derivative needed on edges.
    fn max_normal(&self) -> usize {
        self.cfg.q.max(1)
    }

    fn side_traces(&self, k: usize, e: &Edge) -> Result<SideTraces> {
        let geom = self.mesh.geometry(k);
        let n_ref = geom.reference_direction(e.normal);
        let t_ref = geom.reference_direction(e.tangent);
        let m = self.max_normal();
        let dim = self.basis.dim();
        self.edge
            .points
            .iter()
            .map(|t| {
                let xi = geom.to_reference(self.mesh.edge_point(e, t[0]));
                let partials = self.basis.partials(xi, m)?;
                let mut q = vec![vec![0.0; dim]; 2 + m];
                q[0].copy_from_slice(partials.get(0, 0));
                partials.directional(&[t_ref], &mut q[1]);
                for j in 1..=m {
                    partials.directional(&vec![n_ref; j], &mut q[1 + j]);
                }
                Ok(q)
            })
            .collect()
    }

    fn field_traces(&self, u: &dyn Field, k: usize, e: &Edge) -> Vec<Vec<Complex64>> {
        let m = self.max_normal();
        self.edge
            .points
            .iter()
            .map(|t| {
                let x = self.mesh.edge_point(e, t[0]);
                let mut q = Vec::with_capacity(2 + m);
                q.push(u.value(k, x));
                q.push(u.directional(k, x, e.tangent, 1));
                for j in 1..=m {
                    q.push(u.directional(k, x, e.normal, j));
                }
                q
            })
            .collect()
    }

    /// Physical gradients of all basis functions at volume point `qp`.
    fn physical_gradients(&self, k: usize, qp: usize, gx: &mut [f64], gy: &mut [f64]) {
        let m = self.mesh.geometry(k).inverse;
        let (rx, ry) = (self.vol_dx.row(qp), self.vol_dy.row(qp));
        for i in 0..gx.len() {
            gx[i] = m[0][0] * rx[i] + m[1][0] * ry[i];
            gy[i] = m[0][1] * rx[i] + m[1][1] * ry[i];
        }
    }

    /// Assembles every form as a separate sparse matrix.
    pub fn matrices(&self) -> Result<FormMatrices> {
        let dim = self.basis.dim();
        let n = self.n_dofs();
        let mut lists: Vec<TripletList<f64>> = (0..self.n_slots()).map(|_| TripletList::new(n, n)).collect();

        let (mut gx, mut gy) = (vec![0.0; dim], vec![0.0; dim]);
        let mut local = vec![0.0; dim * dim];
        for k in 0..self.mesh.n_elements() {
            let geom = self.mesh.geometry(k);
            local.fill(0.0);
            for (qp, &w) in self.volume.weights.iter().enumerate() {
                self.physical_gradients(k, qp, &mut gx, &mut gy);
                let wd = w * geom.det;
                for i in 0..dim {
                    for j in 0..dim {
                        local[i * dim + j] += wd * (gx[i] * gx[j] + gy[i] * gy[j]);
                    }
                }
            }
            let base = k * dim;
            let stiff = &mut lists[self.slot_index(Slot::Stiffness)];
            for i in 0..dim {
                for j in 0..dim {
                    stiff.push(base + i, base + j, local[i * dim + j]);
                }
            }
            // Orthonormal reference basis: (φ_i, φ_j)_K = det J δ_ij.
            let mass = &mut lists[self.slot_index(Slot::Mass)];
            for i in 0..dim {
                mass.push(base + i, base + i, geom.det);
            }
        }

        for e in self.mesh.edges() {
            let sides: Vec<usize> = e.sides().collect();
            let ns = sides.len();
            let traces = sides.iter().map(|&k| self.side_traces(k, e)).collect::<Result<Vec<_>>>()?;
            for form in self.forms.iter().filter(|f| f.set.contains(e.kind)) {
                let omega = (form.weight)(e.length);
                let (qa, ca) = (quantity_index(form.trial.0), form.trial.1);
                let (qb, cb) = (quantity_index(form.test.0), form.test.1);
                let list = &mut lists[self.slot_index(form.slot)];
                for (t, &kt) in sides.iter().enumerate() {
                    for (s, &ks) in sides.iter().enumerate() {
                        let c = omega * ca.coefficient(s, ns) * cb.coefficient(t, ns);
                        local.fill(0.0);
                        for (qp, &w) in self.edge.weights.iter().enumerate() {
                            let wl = c * w * e.length;
                            let (tr, te) = (&traces[s][qp][qa], &traces[t][qp][qb]);
                            for i in 0..dim {
                                for j in 0..dim {
                                    local[i * dim + j] += wl * tr[j] * te[i];
                                }
                            }
                        }
                        for i in 0..dim {
                            for j in 0..dim {
                                list.push(kt * dim + i, ks * dim + j, local[i * dim + j]);
                            }
                        }
                    }
                }
            }
        }

        let mut built: Vec<CsrMatrix<f64>> = lists.into_iter().map(TripletList::build).collect();
        let jumps = built.split_off(6);
        let mut it = built.into_iter();
        let (stiffness, flux, flux_adjoint, l1, mass, robin) =
            (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        Ok(FormMatrices { stiffness, flux, flux_adjoint, l1, jumps, mass, robin, sigma: self.cfg.sigma })
    }

    /// Applies every form to the trial field `u` against all basis
    /// functions. `u` must provide derivatives up to `max(q, 1)`.
    pub fn action(&self, u: &dyn Field) -> Result<FormVectors> {
        require_order(u, self.max_normal())?;
        let dim = self.basis.dim();
        let n = self.n_dofs();
        let zero = Complex64::new(0.0, 0.0);
        let mut out: Vec<Vec<Complex64>> = vec![vec![zero; n]; self.n_slots()];

        let (mut gx, mut gy) = (vec![0.0; dim], vec![0.0; dim]);
        for k in 0..self.mesh.n_elements() {
            let geom = self.mesh.geometry(k);
            let base = k * dim;
            for (qp, (xi, w)) in self.volume.iter().enumerate() {
                let x = geom.to_physical(xi);
                let wd = w * geom.det;
                let val = u.value(k, x);
                let g = u.gradient(k, x);
                self.physical_gradients(k, qp, &mut gx, &mut gy);
                let phi = self.vol_values.row(qp);
                for i in 0..dim {
                    out[0][base + i] += (g[0] * gx[i] + g[1] * gy[i]) * wd;
                    out[4][base + i] += val * (phi[i] * wd);
                }
            }
        }

        for e in self.mesh.edges() {
            let sides: Vec<usize> = e.sides().collect();
            let ns = sides.len();
            let test = sides.iter().map(|&k| self.side_traces(k, e)).collect::<Result<Vec<_>>>()?;
            let trial: Vec<_> = sides.iter().map(|&k| self.field_traces(u, k, e)).collect();
            for form in self.forms.iter().filter(|f| f.set.contains(e.kind)) {
                let omega = (form.weight)(e.length);
                let (qa, ca) = (quantity_index(form.trial.0), form.trial.1);
                let (qb, cb) = (quantity_index(form.test.0), form.test.1);
                let slot = self.slot_index(form.slot);
                for (qp, &w) in self.edge.weights.iter().enumerate() {
                    let combined: Complex64 = (0..ns).map(|s| trial[s][qp][qa] * ca.coefficient(s, ns)).sum();
                    let scaled = combined * (omega * w * e.length);
                    for (t, &kt) in sides.iter().enumerate() {
                        let c = cb.coefficient(t, ns);
                        let te = &test[t][qp][qb];
                        for i in 0..dim {
                            out[slot][kt * dim + i] += scaled * (c * te[i]);
                        }
                    }
                }
            }
        }

        let jumps = out.split_off(6);
        let mut it = out.into_iter();
        let (stiffness, flux, flux_adjoint, l1, mass, robin) =
            (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        Ok(FormVectors { stiffness, flux, flux_adjoint, l1, jumps, mass, robin, sigma: self.cfg.sigma })
    }

    /// `(f, φ_i) + ⟨g, φ_i⟩_{Γ_R}`.
    pub fn load(&self, f: &dyn Fn(Point) -> Complex64, g: &dyn Fn(Point, Point) -> Complex64) -> Vec<Complex64> {
        let dim = self.basis.dim();
        let mut b = vec![Complex64::new(0.0, 0.0); self.n_dofs()];
        for k in 0..self.mesh.n_elements() {
            let geom = self.mesh.geometry(k);
            for (qp, (xi, w)) in self.volume.iter().enumerate() {
                let fx = f(geom.to_physical(xi)) * (w * geom.det);
                for (i, phi) in self.vol_values.row(qp).iter().enumerate() {
                    b[k * dim + i] += fx * *phi;
                }
            }
        }
        let mut phi = vec![0.0; dim];
        for (_, e) in self.mesh.edges_of(EdgeKind::Robin) {
            let geom = self.mesh.geometry(e.owner);
            for (t, w) in self.edge.iter() {
                let x = self.mesh.edge_point(e, t[0]);
                let gx = g(x, e.normal) * (w * e.length);
                self.basis.eval_point(geom.to_reference(x), (0, 0), &mut phi).expect("order 0 is supported");
                for i in 0..dim {
                    b[e.owner * dim + i] += gx * phi[i];
                }
            }
        }
        b
    }
}
