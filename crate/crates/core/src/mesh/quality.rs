use serde::Serialize;

use super::{dot, norm, sub, Mesh};

pub const DEFAULT_MIN_ANGLE_DEG: f64 = 20.0;

#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    pub max_h_k: f64,
    pub min_h_k: f64,
    /// Largest `h_K / h_K'` over pairs of edge-adjacent elements.
    pub adjacency_ratio: f64,
    /// `max h_e`.
    pub h: f64,
    pub threshold_deg: f64,
    /// Elements whose smallest angle is below `threshold_deg`.
    pub below_threshold: Vec<usize>,
}

impl QualityReport {
    pub fn acceptable(&self) -> bool {
        self.below_threshold.is_empty() && self.adjacency_ratio <= 2.0
    }
}

pub fn element_angles_deg(v: [[f64; 2]; 3]) -> [f64; 3] {
    std::array::from_fn(|i| {
        let a = sub(v[(i + 1) % 3], v[i]);
        let b = sub(v[(i + 2) % 3], v[i]);
        (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos().to_degrees()
    })
}

pub fn mesh_quality(mesh: &Mesh, threshold_deg: f64) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut below = Vec::new();
    for k in 0..mesh.n_elements() {
        let a = element_angles_deg(mesh.element_vertices(k)).into_iter().fold(f64::INFINITY, f64::min);
        if a < threshold_deg {
            below.push(k);
        }
        min_angle = min_angle.min(a);
    }
    let hk = |k: usize| mesh.geometry(k).diameter;
    let (max_h_k, min_h_k) = (0..mesh.n_elements()).fold((0.0f64, f64::INFINITY), |(mx, mn), k| (mx.max(hk(k)), mn.min(hk(k))));
    let adjacency_ratio = mesh
        .edges()
        .iter()
        .filter_map(|e| e.neighbor.map(|nb| (hk(e.owner), hk(nb))))
        .fold(1.0f64, |m, (a, b)| m.max(a / b).max(b / a));
    QualityReport {
        min_angle_deg: min_angle,
        max_h_k,
        min_h_k,
        adjacency_ratio,
        h: mesh.h_max(),
        threshold_deg,
        below_threshold: below,
    }
}
