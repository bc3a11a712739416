use super::{DomainSpec, Mesh, Point};
use crate::{Error, Result};

/// Uniform right-triangle mesh of `domain` on an `nx × ny` grid. Each cell is
/// split along its lower-left to upper-right diagonal; cells inside the hole
/// are dropped, so the hole corners must sit on grid lines.
pub fn build_structured_mesh(domain: &DomainSpec, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Geometry(format!("grid size must be positive, got {nx} x {ny}")));
    }
    let [lo, hi] = domain.outer;
    let dx = (hi[0] - lo[0]) / nx as f64;
    let dy = (hi[1] - lo[1]) / ny as f64;

    let hole_cells = match domain.hole {
        Some([hlo, hhi]) => {
            let snap = |x: f64, origin: f64, step: f64, axis: &str| -> Result<usize> {
                let s = (x - origin) / step;
                let r = s.round();
                if (s - r).abs() > 1e-9 {
                    return Err(Error::Alignment(format!("hole {axis}-coordinate {x} is not on a grid line")));
                }
                Ok(r as usize)
            };
            Some((
                snap(hlo[0], lo[0], dx, "x")?,
                snap(hhi[0], lo[0], dx, "x")?,
                snap(hlo[1], lo[1], dy, "y")?,
                snap(hhi[1], lo[1], dy, "y")?,
            ))
        }
        None => None,
    };
    let in_hole = |i: usize, j: usize| hole_cells.is_some_and(|(i0, i1, j0, j1)| i >= i0 && i < i1 && j >= j0 && j < j1);

    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut remap = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut vertices: Vec<Point> = Vec::new();
    let mut vertex = |i: usize, j: usize, vertices: &mut Vec<Point>| {
        let g = grid(i, j);
        if remap[g] == usize::MAX {
            remap[g] = vertices.len();
            let x = if i == nx { hi[0] } else { lo[0] + i as f64 * dx };
            let y = if j == ny { hi[1] } else { lo[1] + j as f64 * dy };
            vertices.push([x, y]);
        }
        remap[g]
    };

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if in_hole(i, j) {
                continue;
            }
            let ll = vertex(i, j, &mut vertices);
            let lr = vertex(i + 1, j, &mut vertices);
            let ur = vertex(i + 1, j + 1, &mut vertices);
            let ul = vertex(i, j + 1, &mut vertices);
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }
    Mesh::new(vertices, triangles, domain)
}
