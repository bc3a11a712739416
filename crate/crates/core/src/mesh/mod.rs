//! Conforming triangulations of a rectangle with an optional rectangular
//! scatterer removed.
//!
//! Element labels are storage indices. On an interior edge shared by `K` and
//! `K'` the *owner* is the element with the larger label; the stored normal
//! `n_e` points out of the owner and the jump is `[v] = v|_owner - v|_neighbor`.
//! Boundary edges carry the outward normal of Ω.

mod io;
mod quality;
mod structured;

use std::collections::HashMap;

use serde::Serialize;

use crate::{Error, Result};

pub use io::{read_mesh, write_mesh};
pub use quality::{mesh_quality, QualityReport, DEFAULT_MIN_ANGLE_DEG};
pub use structured::build_structured_mesh;

pub type Point = [f64; 2];

const GEOM_TOL: f64 = 1e-10;

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Outer rectangle Ω₁, optional hole D, and the star-shape data
/// `x_Ω₁`, `c_Ω₁`, `c_D` used by the stability diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSpec {
    pub outer: [Point; 2],
    pub hole: Option<[Point; 2]>,
    pub star_center: Point,
    pub c_outer: f64,
    pub c_hole: f64,
}

fn check_rect(r: [Point; 2], what: &str) -> Result<()> {
    let [lo, hi] = r;
    if !(lo.iter().chain(&hi).all(|v| v.is_finite()) && hi[0] - lo[0] > GEOM_TOL && hi[1] - lo[1] > GEOM_TOL) {
        return Err(Error::Geometry(format!("degenerate {what} rectangle {lo:?}-{hi:?}")));
    }
    Ok(())
}

/// Smallest distance from `x` to the sides of the rectangle `r`.
fn side_distance(r: [Point; 2], x: Point) -> f64 {
    let [lo, hi] = r;
    (x[0] - lo[0]).min(hi[0] - x[0]).min(x[1] - lo[1]).min(hi[1] - x[1])
}

impl DomainSpec {
    /// Rectangle `[lo, hi]` without scatterer, star-shaped about its centre.
    pub fn rectangle(lo: Point, hi: Point) -> Result<Self> {
        check_rect([lo, hi], "outer")?;
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        Ok(Self { outer: [lo, hi], hole: None, star_center: center, c_outer: side_distance([lo, hi], center), c_hole: 0.0 })
    }

    pub fn unit_square() -> Self {
        Self::rectangle([0.0, 0.0], [1.0, 1.0]).expect("unit square is valid")
    }

    /// Removes the rectangle `[lo, hi]`; the star centre moves to the hole's
    /// centre.
    pub fn with_hole(mut self, lo: Point, hi: Point) -> Result<Self> {
        check_rect([lo, hi], "hole")?;
        let [olo, ohi] = self.outer;
        if !(lo[0] > olo[0] + GEOM_TOL && lo[1] > olo[1] + GEOM_TOL && hi[0] < ohi[0] - GEOM_TOL && hi[1] < ohi[1] - GEOM_TOL)
        {
            return Err(Error::Geometry("hole must lie strictly inside the outer rectangle".into()));
        }
        self.hole = Some([lo, hi]);
        self.with_star_center([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])])
    }

    pub fn with_star_center(mut self, center: Point) -> Result<Self> {
        let c_outer = side_distance(self.outer, center);
        if c_outer <= 0.0 {
            return Err(Error::Geometry("star centre must lie strictly inside Ω₁".into()));
        }
        let c_hole = match self.hole {
            Some(h) => {
                let c = side_distance(h, center);
                if c < 0.0 {
                    return Err(Error::Geometry("the hole must contain the star centre".into()));
                }
                c
            }
            None => 0.0,
        };
        self.star_center = center;
        self.c_outer = c_outer;
        self.c_hole = c_hole;
        Ok(self)
    }

    /// `α(x) = x - x_Ω₁`.
    #[inline]
    pub fn alpha(&self, x: Point) -> Point {
        sub(x, self.star_center)
    }

    pub fn area(&self) -> f64 {
        let rect = |[lo, hi]: [Point; 2]| (hi[0] - lo[0]) * (hi[1] - lo[1]);
        rect(self.outer) - self.hole.map_or(0.0, rect)
    }

    pub fn diameter(&self) -> f64 {
        norm(sub(self.outer[1], self.outer[0]))
    }

    pub fn on_outer_boundary(&self, x: Point) -> bool {
        on_rect_boundary(self.outer, x)
    }

    pub fn on_hole_boundary(&self, x: Point) -> bool {
        self.hole.is_some_and(|h| on_rect_boundary(h, x))
    }

    /// Checks `(x - x_Ω₁)·n ≥ c_Ω₁` at the Gauss points of every Robin edge.
    pub fn star_shape_holds(&self, mesh: &Mesh) -> bool {
        let rule = crate::basis::edge_rule(4);
        mesh.edges_of(EdgeKind::Robin).all(|(_, e)| {
            rule.points.iter().all(|t| dot(self.alpha(mesh.edge_point(e, t[0])), e.normal) >= self.c_outer - GEOM_TOL)
        })
    }
}

fn on_rect_boundary([lo, hi]: [Point; 2], x: Point) -> bool {
    let tol = GEOM_TOL * (1.0 + norm(sub(hi, lo)));
    let inside = x[0] >= lo[0] - tol && x[0] <= hi[0] + tol && x[1] >= lo[1] - tol && x[1] <= hi[1] + tol;
    let near = (x[0] - lo[0]).abs() < tol || (x[0] - hi[0]).abs() < tol || (x[1] - lo[1]).abs() < tol || (x[1] - hi[1]).abs() < tol;
    inside && near
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeKind {
    Interior,
    Robin,
    Dirichlet,
}

impl EdgeKind {
    pub fn tag(self) -> char {
        match self {
            EdgeKind::Interior => 'I',
            EdgeKind::Robin => 'R',
            EdgeKind::Dirichlet => 'D',
        }
    }

    /// Member of `E_h^{ID}` (interior or Dirichlet).
    pub fn in_id(self) -> bool {
        matches!(self, EdgeKind::Interior | EdgeKind::Dirichlet)
    }

    /// Member of `E_h^{RD}` (boundary).
    pub fn in_rd(self) -> bool {
        !matches!(self, EdgeKind::Interior)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, ordered counterclockwise with respect to `owner`.
    pub vertices: [usize; 2],
    /// Element with the larger label (the only element on a boundary edge).
    pub owner: usize,
    /// Element with the smaller label on an interior edge.
    pub neighbor: Option<usize>,
    pub kind: EdgeKind,
    pub normal: Point,
    /// `normal` rotated by +90°.
    pub tangent: Point,
    pub length: f64,
}

impl Edge {
    /// Elements adjacent to the edge, owner first.
    pub fn sides(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.owner).chain(self.neighbor)
    }
}

/// Affine map `x = origin + J ξ` from the reference triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub origin: Point,
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jacobian: [[f64; 2]; 2],
    pub inverse: [[f64; 2]; 2],
    pub det: f64,
    pub area: f64,
    pub diameter: f64,
}

impl ElementGeometry {
    pub(crate) fn new(v: [Point; 3]) -> Result<Self> {
        let a = sub(v[1], v[0]);
        let b = sub(v[2], v[0]);
        let det = a[0] * b[1] - a[1] * b[0];
        let scale = norm(a).max(norm(b));
        if !(det.is_finite() && det > GEOM_TOL * scale * scale) {
            return Err(Error::Geometry(format!("triangle {v:?} is degenerate or clockwise")));
        }
        let jacobian = [[a[0], b[0]], [a[1], b[1]]];
        let inverse = [[b[1] / det, -b[0] / det], [-a[1] / det, a[0] / det]];
        let diameter = norm(a).max(norm(b)).max(norm(sub(v[2], v[1])));
        Ok(Self { origin: v[0], jacobian, inverse, det, area: 0.5 * det, diameter })
    }

    #[inline]
    pub fn to_physical(&self, xi: Point) -> Point {
        let j = &self.jacobian;
        [self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1], self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1]]
    }

    #[inline]
    pub fn to_reference(&self, x: Point) -> Point {
        let d = sub(x, self.origin);
        let m = &self.inverse;
        [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]]
    }

    /// `J⁻¹ d`: a physical direction expressed in reference coordinates.
    #[inline]
    pub fn reference_direction(&self, d: Point) -> Point {
        let m = &self.inverse;
        [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]]
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    element_edges: Vec<[usize; 3]>,
    geometry: Vec<ElementGeometry>,
}

/// Unclassified edge topology.
struct RawEdge {
    vertices: [usize; 2],
    owner: usize,
    neighbor: Option<usize>,
}

fn derive_topology(triangles: &[[usize; 3]]) -> Result<(Vec<RawEdge>, Vec<[usize; 3]>)> {
    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
    let mut edges: Vec<RawEdge> = Vec::with_capacity(triangles.len() * 2);
    let mut element_edges = Vec::with_capacity(triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        let mut local = [0usize; 3];
        for (l, slot) in local.iter_mut().enumerate() {
            let (a, b) = (tri[l], tri[(l + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match index.get(&key) {
                Some(&e) => {
                    let edge = &mut edges[e];
                    if edge.neighbor.is_some() {
                        return Err(Error::Topology(format!("edge {key:?} is shared by more than two triangles")));
                    }
                    // Triangles are visited in label order, so `t` is the larger label.
                    edge.neighbor = Some(edge.owner);
                    edge.owner = t;
                    edge.vertices = [a, b];
                    *slot = e;
                }
                None => {
                    index.insert(key, edges.len());
                    *slot = edges.len();
                    edges.push(RawEdge { vertices: [a, b], owner: t, neighbor: None });
                }
            }
        }
        element_edges.push(local);
    }
    Ok((edges, element_edges))
}

impl Mesh {
    /// Builds a mesh from counterclockwise triangles. Boundary edges are
    /// tagged by `classify`, which sees the edge endpoints.
    fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        mut classify: impl FnMut([usize; 2], [Point; 2], bool) -> Result<EdgeKind>,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Geometry("mesh has no triangles".into()));
        }
        for tri in &triangles {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Topology(format!("triangle {tri:?} references a missing vertex")));
            }
        }
        let geometry = triangles
            .iter()
            .map(|t| ElementGeometry::new([vertices[t[0]], vertices[t[1]], vertices[t[2]]]))
            .collect::<Result<Vec<_>>>()?;
        let (raw, element_edges) = derive_topology(&triangles)?;
        let edges = raw
            .into_iter()
            .map(|r| {
                let [a, b] = r.vertices;
                let d = sub(vertices[b], vertices[a]);
                let length = norm(d);
                let tangent = [d[0] / length, d[1] / length];
                let normal = [tangent[1], -tangent[0]];
                let kind = classify([a, b], [vertices[a], vertices[b]], r.neighbor.is_some())?;
                Ok(Edge { vertices: r.vertices, owner: r.owner, neighbor: r.neighbor, kind, normal, tangent, length })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vertices, triangles, edges, element_edges, geometry })
    }

    /// Builds a mesh and tags boundary edges from the domain geometry.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, domain: &DomainSpec) -> Result<Self> {
        Self::assemble(vertices, triangles, |_, ends, interior| classify_edge(domain, ends, interior))
    }

    /// Builds a mesh with explicit edge tags, keyed by unordered vertex pair.
    pub fn with_tags(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, tags: &[([usize; 2], EdgeKind)]) -> Result<Self> {
        let lookup: HashMap<(usize, usize), EdgeKind> =
            tags.iter().map(|&([a, b], k)| ((a.min(b), a.max(b)), k)).collect();
        let mut mesh = Self::assemble(vertices, triangles, |_, _, _| Ok(EdgeKind::Interior))?;
        for e in &mut mesh.edges {
            let [a, b] = e.vertices;
            let kind = *lookup
                .get(&(a.min(b), a.max(b)))
                .ok_or_else(|| Error::Topology(format!("edge ({a}, {b}) has no tag")))?;
            if (kind == EdgeKind::Interior) != e.neighbor.is_some() {
                return Err(Error::Topology(format!("edge ({a}, {b}) tagged {kind:?} but has {} adjacent elements", 1 + e.neighbor.is_some() as usize)));
            }
            e.kind = kind;
        }
        if lookup.len() != mesh.edges.len() {
            return Err(Error::Topology(format!("{} edge tags given for {} edges", lookup.len(), mesh.edges.len())));
        }
        Ok(mesh)
    }

    /// Relabels elements: new element `i` is old element `perm[i]`. Edge
    /// owners, normals and jump signs follow the new labels.
    pub fn permute_elements(&self, perm: &[usize]) -> Result<Self> {
        let n = self.triangles.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Config("not a permutation of the element labels".into()));
        }
        let triangles = perm.iter().map(|&p| self.triangles[p]).collect();
        let kinds: HashMap<(usize, usize), EdgeKind> = self
            .edges
            .iter()
            .map(|e| ((e.vertices[0].min(e.vertices[1]), e.vertices[0].max(e.vertices[1])), e.kind))
            .collect();
        Self::assemble(self.vertices.clone(), triangles, |[a, b], _, _| Ok(kinds[&(a.min(b), a.max(b))]))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = (usize, &Edge)> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.kind == kind)
    }

    pub fn element_edges(&self, k: usize) -> [usize; 3] {
        self.element_edges[k]
    }

    pub fn geometry(&self, k: usize) -> &ElementGeometry {
        &self.geometry[k]
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }

    pub fn element_vertices(&self, k: usize) -> [Point; 3] {
        self.triangles[k].map(|v| self.vertices[v])
    }

    pub fn centroid(&self, k: usize) -> Point {
        let [a, b, c] = self.element_vertices(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Point on edge `e` at parameter `t ∈ [0, 1]` from its first vertex.
    #[inline]
    pub fn edge_point(&self, e: &Edge, t: f64) -> Point {
        let a = self.vertices[e.vertices[0]];
        let b = self.vertices[e.vertices[1]];
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
    }

    pub fn edge_midpoint(&self, e: &Edge) -> Point {
        self.edge_point(e, 0.5)
    }

    /// `h = max h_e`.
    pub fn h_max(&self) -> f64 {
        self.edges.iter().fold(0.0, |m, e| m.max(e.length))
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Outward unit normal of element `k` on edge `e`.
    pub fn outward_normal(&self, k: usize, e: &Edge) -> Point {
        if e.owner == k {
            e.normal
        } else {
            [-e.normal[0], -e.normal[1]]
        }
    }
}

fn classify_edge(domain: &DomainSpec, [a, b]: [Point; 2], interior: bool) -> Result<EdgeKind> {
    if interior {
        return Ok(EdgeKind::Interior);
    }
    let on = |f: &dyn Fn(Point) -> bool| f(a) && f(b) && f([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
    if on(&|x| domain.on_outer_boundary(x)) {
        Ok(EdgeKind::Robin)
    } else if on(&|x| domain.on_hole_boundary(x)) {
        Ok(EdgeKind::Dirichlet)
    } else {
        Err(Error::Topology(format!("boundary edge {a:?}-{b:?} lies on neither Γ_R nor Γ_D")))
    }
}

/// Re-derives every edge tag from the domain geometry: interior iff two
/// adjacent elements, Robin on the outer rectangle, Dirichlet on the hole.
pub fn classify_edges(mesh: &Mesh, domain: &DomainSpec) -> Result<Mesh> {
    let mut out = mesh.clone();
    for e in &mut out.edges {
        let ends = [mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]];
        e.kind = classify_edge(domain, ends, e.neighbor.is_some())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus() -> (DomainSpec, Mesh) {
        let d = DomainSpec::unit_square().with_hole([0.25, 0.25], [0.75, 0.75]).unwrap();
        let m = build_structured_mesh(&d, 4, 4).unwrap();
        (d, m)
    }

    #[test]
    fn single_cell_counts() {
        let m = build_structured_mesh(&DomainSpec::unit_square(), 1, 1).unwrap();
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.n_edges(), 5);
        assert_eq!(m.count(EdgeKind::Interior), 1);
        assert_eq!(m.count(EdgeKind::Robin), 4);
        assert_eq!(m.count(EdgeKind::Dirichlet), 0);
    }

    #[test]
    fn two_by_two_counts() {
        // 9 vertices, 8 triangles: E = V + F - 1 = 16, of which 8 lie on the boundary.
        let m = build_structured_mesh(&DomainSpec::unit_square(), 2, 2).unwrap();
        assert_eq!(m.n_elements(), 8);
        assert_eq!(m.n_edges(), 16);
        assert_eq!(m.count(EdgeKind::Interior), 8);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn square_annulus_counts() {
        let (_, m) = annulus();
        assert_eq!(m.n_elements(), 24);
        assert_eq!(m.count(EdgeKind::Dirichlet), 8);
        assert_eq!(m.count(EdgeKind::Robin), 16);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn no_hole_means_no_dirichlet_edges() {
        let m = build_structured_mesh(&DomainSpec::unit_square(), 3, 5).unwrap();
        assert_eq!(m.count(EdgeKind::Dirichlet), 0);
        let id = m.edges().iter().filter(|e| e.kind.in_id()).count();
        assert_eq!(id, m.count(EdgeKind::Interior));
    }

    #[test]
    fn interior_normals_point_out_of_larger_label() {
        let (_, m) = annulus();
        for e in m.edges() {
            assert!((norm(e.normal) - 1.0).abs() < 1e-14);
            assert!((e.tangent[0] + e.normal[1]).abs() < 1e-14 && (e.tangent[1] - e.normal[0]).abs() < 1e-14);
            if let Some(nb) = e.neighbor {
                assert!(e.owner > nb);
                let d = sub(m.centroid(nb), m.centroid(e.owner));
                assert!(dot(d, e.normal) > 0.0);
            }
        }
    }

    #[test]
    fn element_normals_close() {
        let (_, m) = annulus();
        for k in 0..m.n_elements() {
            let mut s = [0.0; 2];
            for e in m.element_edges(k) {
                let e = &m.edges()[e];
                let n = m.outward_normal(k, e);
                s[0] += e.length * n[0];
                s[1] += e.length * n[1];
            }
            assert!(norm(s) < 1e-14);
        }
    }

    #[test]
    fn star_shape_orientation() {
        let (d, m) = annulus();
        assert!(d.star_shape_holds(&m));
        for (_, e) in m.edges_of(EdgeKind::Dirichlet) {
            assert!(dot(d.alpha(m.edge_midpoint(e)), e.normal) <= 0.0);
        }
        for (_, e) in m.edges_of(EdgeKind::Robin) {
            assert!(dot(d.alpha(m.edge_midpoint(e)), e.normal) >= d.c_outer - 1e-12);
        }
        assert!((d.c_outer - 0.5).abs() < 1e-15 && (d.c_hole - 0.25).abs() < 1e-15);
    }

    #[test]
    fn classification_is_idempotent() {
        let (d, m) = annulus();
        let again = classify_edges(&m, &d).unwrap();
        assert!(m.edges().iter().zip(again.edges()).all(|(a, b)| a.kind == b.kind));
    }

    #[test]
    fn stray_boundary_edge_is_a_topology_error() {
        // A lone triangle inside the unit square has boundary edges on neither boundary.
        let v = vec![[0.2, 0.2], [0.6, 0.2], [0.2, 0.6]];
        let err = Mesh::new(v, vec![[0, 1, 2]], &DomainSpec::unit_square()).unwrap_err();
        assert!(matches!(err, Error::Topology(_)));
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let err = Mesh::new(v, vec![[0, 2, 1]], &DomainSpec::unit_square()).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn permutation_moves_ownership() {
        let m = build_structured_mesh(&DomainSpec::unit_square(), 1, 1).unwrap();
        let p = m.permute_elements(&[1, 0]).unwrap();
        let e0 = m.edges().iter().find(|e| e.kind == EdgeKind::Interior).unwrap();
        let e1 = p.edges().iter().find(|e| e.kind == EdgeKind::Interior).unwrap();
        assert_eq!(e0.normal, [-e1.normal[0], -e1.normal[1]]);
        assert!(m.permute_elements(&[0, 0]).is_err());
    }

    #[test]
    fn invalid_domains() {
        assert!(DomainSpec::rectangle([0.0, 0.0], [0.0, 1.0]).is_err());
        assert!(DomainSpec::unit_square().with_hole([0.0, 0.2], [0.5, 0.5]).is_err());
        assert!(DomainSpec::unit_square().with_hole([0.2, 0.2], [0.5, 0.5]).unwrap().with_star_center([0.9, 0.9]).is_err());
    }
}
