//! Assembled blocks against a dense, term-by-term quadrature oracle on a
//! skewed two-element mesh. The oracle rebuilds every physical basis
//! function as an explicit polynomial in `(x, y)`, derives normals and jump
//! signs from vertex coordinates and labels, and integrates each form
//! literally with its own Duffy and Gauss rules.

use hpdg_core::assembly::{Assembler, PenaltyConfig};
use hpdg_core::basis::{gauss_legendre, ReferenceBasis};
use hpdg_core::{Complex64, EdgeKind, Mesh, Point};

const VERTS: [Point; 4] = [[0.0, 0.0], [1.1, 0.15], [1.25, 1.0], [0.05, 0.85]];
const TRIS: [[usize; 3]; 2] = [[0, 1, 2], [0, 2, 3]];

fn tags() -> Vec<([usize; 2], EdgeKind)> {
    vec![
        ([0, 1], EdgeKind::Robin),
        ([1, 2], EdgeKind::Dirichlet),
        ([2, 3], EdgeKind::Robin),
        ([3, 0], EdgeKind::Robin),
        ([0, 2], EdgeKind::Interior),
    ]
}

/// `Σ c_ab (x - x0)^a (y - y0)^b`
#[derive(Clone)]
struct Poly {
    center: Point,
    terms: Vec<(usize, usize, f64)>,
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn choose(n: usize, k: usize) -> f64 {
    falling(n, k) / falling(k, k)
}

impl Poly {
    fn partial(&self, x: Point, da: usize, db: usize) -> f64 {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        self.terms
            .iter()
            .filter(|t| t.0 >= da && t.1 >= db)
            .map(|&(a, b, c)| c * falling(a, da) * falling(b, db) * dx.powi((a - da) as i32) * dy.powi((b - db) as i32))
            .sum()
    }

    /// `(d·∇)^j`
    fn dir(&self, x: Point, d: Point, j: usize) -> f64 {
        (0..=j).map(|s| choose(j, s) * d[0].powi(s as i32) * d[1].powi((j - s) as i32) * self.partial(x, s, j - s)).sum()
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Collapsed Gauss product rule on a physical triangle.
fn duffy(v: [Point; 3], n: usize) -> Vec<(Point, f64)> {
    let (gx, gw) = gauss_legendre(n);
    let area2 = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs();
    let mut out = Vec::new();
    for (i, &s) in gx.iter().enumerate() {
        for (j, &t) in gx.iter().enumerate() {
            let (s, t) = ((s + 1.0) / 2.0, (t + 1.0) / 2.0);
            let (a, b) = (s, t * (1.0 - s));
            let x = [
                v[0][0] + a * (v[1][0] - v[0][0]) + b * (v[2][0] - v[0][0]),
                v[0][1] + a * (v[1][1] - v[0][1]) + b * (v[2][1] - v[0][1]),
            ];
            out.push((x, gw[i] * gw[j] / 4.0 * (1.0 - s) * area2));
        }
    }
    out
}

/// Physical basis functions of element `k` as explicit polynomials, by
/// L² projection onto centred monomials.
fn physical_basis(mesh: &Mesh, basis: &ReferenceBasis, k: usize) -> Vec<Poly> {
    let v = mesh.element_vertices(k);
    let center = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
    let p = basis.degree();
    let mono: Vec<(usize, usize)> = (0..=p).flat_map(|n| (0..=n).map(move |b| (n - b, b))).collect();
    let m = |x: Point, (a, b): (usize, usize)| (x[0] - center[0]).powi(a as i32) * (x[1] - center[1]).powi(b as i32);
    let rule = duffy(v, p + 3);
    let gram: Vec<Vec<f64>> = mono.iter().map(|&r| mono.iter().map(|&c| rule.iter().map(|&(x, w)| w * m(x, r) * m(x, c)).sum()).collect()).collect();
    let geom = mesh.geometry(k);
    (0..basis.dim())
        .map(|i| {
            let rhs: Vec<f64> = mono
                .iter()
                .map(|&r| {
                    rule.iter()
                        .map(|&(x, w)| {
                            let mut vals = vec![0.0; basis.dim()];
                            basis.eval_point(geom.to_reference(x), (0, 0), &mut vals).unwrap();
                            w * m(x, r) * vals[i]
                        })
                        .sum()
                })
                .collect();
            let c = solve_dense(gram.clone(), rhs);
            Poly { center, terms: mono.iter().zip(c).map(|(&(a, b), c)| (a, b, c)).collect() }
        })
        .collect()
}

struct OracleEdge {
    ends: [Point; 2],
    kind: EdgeKind,
    /// (element, sign of the element in the jump)
    sides: Vec<(usize, f64)>,
    normal: Point,
}

fn oracle_edges() -> Vec<OracleEdge> {
    tags()
        .into_iter()
        .map(|([a, b], kind)| {
            let elems: Vec<usize> = (0..2).filter(|&k| TRIS[k].contains(&a) && TRIS[k].contains(&b)).collect();
            let owner = *elems.iter().max().unwrap();
            let (pa, pb) = (VERTS[a], VERTS[b]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let mut n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
            // Orient out of the owner: away from its third vertex.
            let third = TRIS[owner].iter().copied().find(|&v| v != a && v != b).unwrap();
            let to_third = [VERTS[third][0] - pa[0], VERTS[third][1] - pa[1]];
            if n[0] * to_third[0] + n[1] * to_third[1] > 0.0 {
                n = [-n[0], -n[1]];
            }
            let sides = elems.iter().map(|&k| (k, if k == owner { 1.0 } else { -1.0 })).collect();
            OracleEdge { ends: [pa, pb], kind, sides, normal: n }
        })
        .collect()
}

type Dense = Vec<Vec<f64>>;

struct Oracle {
    stiffness: Dense,
    flux: Dense,
    flux_adjoint: Dense,
    l1: Dense,
    jumps: Vec<Dense>,
    mass: Dense,
    robin: Dense,
    load: Vec<Complex64>,
}

fn f_source(x: Point) -> Complex64 {
    Complex64::new(1.0 + x[0] * x[1], 2.0 * x[0] - x[1] * x[1])
}

fn g_robin(x: Point, n: Point) -> Complex64 {
    Complex64::new(x[0] - 0.5 * n[1], 3.0 * x[1] * n[0])
}

fn oracle(mesh: &Mesh, basis: &ReferenceBasis, cfg: &PenaltyConfig) -> Oracle {
    let p = basis.degree();
    let pf = p as f64;
    let dim = basis.dim();
    let n = 2 * dim;
    let phys: Vec<Vec<Poly>> = (0..2).map(|k| physical_basis(mesh, basis, k)).collect();
    let zero = || vec![vec![0.0; n]; n];
    let mut o = Oracle {
        stiffness: zero(),
        flux: zero(),
        flux_adjoint: zero(),
        l1: zero(),
        jumps: (0..=cfg.q).map(|_| zero()).collect(),
        mass: zero(),
        robin: zero(),
        load: vec![Complex64::new(0.0, 0.0); n],
    };
    for (k, funcs) in phys.iter().enumerate() {
        let v = [VERTS[TRIS[k][0]], VERTS[TRIS[k][1]], VERTS[TRIS[k][2]]];
        for (x, w) in duffy(v, p + 4) {
            for i in 0..dim {
                o.load[k * dim + i] += f_source(x) * funcs[i].partial(x, 0, 0) * w;
                for j in 0..dim {
                    let (fi, fj) = (&funcs[i], &funcs[j]);
                    o.stiffness[k * dim + i][k * dim + j] +=
                        w * (fi.partial(x, 1, 0) * fj.partial(x, 1, 0) + fi.partial(x, 0, 1) * fj.partial(x, 0, 1));
                    o.mass[k * dim + i][k * dim + j] += w * fi.partial(x, 0, 0) * fj.partial(x, 0, 0);
                }
            }
        }
    }
    let (gx, gw) = gauss_legendre(p + 4);
    for e in oracle_edges() {
        let [a, b] = e.ends;
        let h = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let tau = [-e.normal[1], e.normal[0]];
        let interior = e.sides.len() == 2;
        let avg = if interior { 0.5 } else { 1.0 };
        for (s, &t) in gx.iter().enumerate() {
            let t = (t + 1.0) / 2.0;
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let w = gw[s] / 2.0 * h;
            for &(ki, si) in &e.sides {
                for i in 0..dim {
                    let fi = &phys[ki][i];
                    let r = ki * dim + i;
                    if e.kind == EdgeKind::Robin {
                        o.load[r] += g_robin(x, e.normal) * fi.partial(x, 0, 0) * w;
                    }
                    for &(kj, sj) in &e.sides {
                        for j in 0..dim {
                            let fj = &phys[kj][j];
                            let c = kj * dim + j;
                            if e.kind == EdgeKind::Robin {
                                o.robin[r][c] += w * fi.partial(x, 0, 0) * fj.partial(x, 0, 0);
                                continue;
                            }
                            let (vi, vj) = (si * fi.partial(x, 0, 0), sj * fj.partial(x, 0, 0));
                            o.flux[r][c] -= w * avg * fj.dir(x, e.normal, 1) * vi;
                            o.flux_adjoint[r][c] -= w * vj * avg * fi.dir(x, e.normal, 1);
                            o.l1[r][c] += w * cfg.beta1 * pf / h * si * fi.dir(x, tau, 1) * sj * fj.dir(x, tau, 1);
                            o.jumps[0][r][c] += w * cfg.gamma[0] * pf / h * vi * vj;
                            if interior {
                                for q in 1..=cfg.q {
                                    let wq = cfg.gamma[q] * (h / pf).powi(2 * q as i32 - 1);
                                    o.jumps[q][r][c] += w * wq * si * fi.dir(x, e.normal, q) * sj * fj.dir(x, e.normal, q);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    o
}

fn max_abs(a: &Dense) -> f64 {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

fn deviation(got: &hpdg_core::sparse::CsrMatrix<f64>, want: &Dense) -> f64 {
    let scale = max_abs(want).max(1.0);
    let mut worst = 0.0f64;
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            worst = worst.max((got.get(i, j) - w).abs() / scale);
        }
    }
    worst
}

fn add(a: &Dense, b: &Dense, c: &Dense) -> Dense {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x.iter().zip(y).zip(z).map(|((x, y), z)| x + y + z).collect()).collect()
}

pub fn two_element_mesh() -> Mesh {
    Mesh::with_tags(VERTS.to_vec(), TRIS.to_vec(), &tags()).unwrap()
}

/// Largest entrywise deviation, relative to the oracle block's size, of
/// every assembled block at degree `p` with `q = p`.
pub fn block_deviations(p: usize) -> Vec<(String, f64)> {
    let mesh = two_element_mesh();
    let basis = ReferenceBasis::new(p).unwrap();
    let gamma = [2.0, 0.5, 0.3, 0.2][..=p].to_vec();
    let cfg = PenaltyConfig::new(gamma, 0.7).unwrap();
    let asm = Assembler::new(&mesh, &basis, &cfg).unwrap();
    let m = asm.matrices().unwrap();
    let o = oracle(&mesh, &basis, &cfg);

    let mut out = vec![
        ("b_h".to_string(), deviation(&m.b_h(), &add(&o.stiffness, &o.flux, &o.flux_adjoint))),
        ("stiffness".to_string(), deviation(&m.stiffness, &o.stiffness)),
        ("flux".to_string(), deviation(&m.flux, &o.flux)),
        ("flux_adjoint".to_string(), deviation(&m.flux_adjoint, &o.flux_adjoint)),
        ("L1".to_string(), deviation(&m.l1, &o.l1)),
        ("mass".to_string(), deviation(&m.mass, &o.mass)),
        ("robin".to_string(), deviation(&m.robin, &o.robin)),
    ];
    assert_eq!(m.jumps.len(), p + 1);
    for (q, (got, want)) in m.jumps.iter().zip(&o.jumps).enumerate() {
        out.push((format!("J{q}"), deviation(got, want)));
    }
    let load = asm.load(&f_source, &g_robin);
    let scale = o.load.iter().fold(1.0f64, |s, z| s.max(z.norm()));
    let worst = load.iter().zip(&o.load).fold(0.0f64, |m, (g, w)| m.max((g - w).norm() / scale));
    out.push(("load".to_string(), worst));
    out
}
