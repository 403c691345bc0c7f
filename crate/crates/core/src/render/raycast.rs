//! Orthographic ray casting along `-z` through pixel centers of the view
//! window `(-1, 1)^2`. The camera sits at `+z`, so the nearest hit is the one
//! with the largest `z`, and depth is reported as that `z` value.

use crate::error::{Error, Result};
use crate::tensor::{pixel_center, Frame};

use super::mesh::{cross, norm, sub, TriangleMesh};

/// Depth written at pixels whose ray misses the surface: the `z = 0` background plane.
pub const BACKGROUND_DEPTH: f64 = 0.0;

/// Triangles with a smaller 3D area are skipped.
pub const MIN_TRIANGLE_AREA: f64 = 1e-15;

const EDGE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub triangle: u32,
    /// Barycentric weights of the second and third triangle vertex.
    pub b1: f64,
    pub b2: f64,
    pub z: f64,
}

/// Nearest hit per pixel, row-major.
#[derive(Clone, Debug)]
pub struct HitBuffer {
    width: usize,
    height: usize,
    hits: Vec<Option<Hit>>,
}

impl HitBuffer {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<&Hit> {
        self.hits[y * self.width + x].as_ref()
    }

    pub fn mask(&self) -> Vec<bool> {
        self.hits.iter().map(Option::is_some).collect()
    }

    pub fn depth(&self) -> Frame {
        Frame::from_fn(self.width, self.height, |x, y| {
            self.get(x, y).map_or(BACKGROUND_DEPTH, |h| h.z)
        })
    }
}

/// Depth frame plus the mask of pixels that hit the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthFrame {
    pub depth: Frame,
    pub mask: Vec<bool>,
}

/// Uniform grid over the view window; each cell lists the triangles whose
/// projected bounding box overlaps it.
struct CellGrid {
    cols: usize,
    rows: usize,
    cells: Vec<Vec<u32>>,
}

impl CellGrid {
    fn build(mesh: &TriangleMesh, cols: usize, rows: usize) -> Self {
        let mut cells = vec![Vec::new(); cols * rows];
        let pos = mesh.positions();
        let to_cell = |v: f64, n: usize| ((v + 1.0) * 0.5 * n as f64).floor();
        for (ti, t) in mesh.triangles().iter().enumerate() {
            let [a, b, c] = t.map(|i| pos[i as usize]);
            if 0.5 * norm(cross(sub(b, a), sub(c, a))) < MIN_TRIANGLE_AREA {
                continue;
            }
            let (xmin, xmax) = (a[0].min(b[0]).min(c[0]), a[0].max(b[0]).max(c[0]));
            let (ymin, ymax) = (a[1].min(b[1]).min(c[1]), a[1].max(b[1]).max(c[1]));
            if xmax < -1.0 || xmin > 1.0 || ymax < -1.0 || ymin > 1.0 {
                continue;
            }
            let clamp = |v: f64, n: usize| v.clamp(0.0, (n - 1) as f64) as usize;
            let (c0, c1) = (clamp(to_cell(xmin, cols), cols), clamp(to_cell(xmax, cols), cols));
            let (r0, r1) = (clamp(to_cell(ymin, rows), rows), clamp(to_cell(ymax, rows), rows));
            for r in r0..=r1 {
                for c in c0..=c1 {
                    cells[r * cols + c].push(ti as u32);
                }
            }
        }
        Self { cols, rows, cells }
    }

    fn cell_of(&self, x: f64, y: f64) -> &[u32] {
        let c = (((x + 1.0) * 0.5 * self.cols as f64) as usize).min(self.cols - 1);
        let r = (((y + 1.0) * 0.5 * self.rows as f64) as usize).min(self.rows - 1);
        &self.cells[r * self.cols + c]
    }
}

/// Intersection of the vertical ray through `(px, py)` with triangle `abc`.
#[inline]
fn intersect(a: [f64; 3], b: [f64; 3], c: [f64; 3], px: f64, py: f64) -> Option<(f64, f64, f64)> {
    let (e1x, e1y) = (b[0] - a[0], b[1] - a[1]);
    let (e2x, e2y) = (c[0] - a[0], c[1] - a[1]);
    let det = e1x * e2y - e2x * e1y;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let (qx, qy) = (px - a[0], py - a[1]);
    let b1 = (qx * e2y - e2x * qy) / det;
    let b2 = (e1x * qy - qx * e1y) / det;
    if b1 < -EDGE_TOLERANCE || b2 < -EDGE_TOLERANCE || b1 + b2 > 1.0 + EDGE_TOLERANCE {
        return None;
    }
    // written relative to vertex a so equal vertex depths interpolate exactly
    let z = a[2] + b1 * (b[2] - a[2]) + b2 * (c[2] - a[2]);
    Some((b1, b2, z))
}

/// Casts one ray per pixel of a `width x height` image and keeps the nearest hit.
pub fn cast_rays(mesh: &TriangleMesh, width: usize, height: usize) -> Result<HitBuffer> {
    if width == 0 || height == 0 {
        return Err(Error::Size(format!("ray-cast resolution {width}x{height}")));
    }
    let grid = CellGrid::build(mesh, width, height);
    let pos = mesh.positions();
    let tris = mesh.triangles();
    let mut hits = Vec::with_capacity(width * height);
    for y in 0..height {
        let py = pixel_center(y, height);
        for x in 0..width {
            let px = pixel_center(x, width);
            let mut best: Option<Hit> = None;
            for &ti in grid.cell_of(px, py) {
                let [a, b, c] = tris[ti as usize].map(|i| pos[i as usize]);
                if let Some((b1, b2, z)) = intersect(a, b, c, px, py) {
                    if best.map_or(true, |h| z > h.z) {
                        best = Some(Hit { triangle: ti, b1, b2, z });
                    }
                }
            }
            hits.push(best);
        }
    }
    debug_assert_eq!(grid.rows, height);
    Ok(HitBuffer { width, height, hits })
}

/// Depth of the nearest surface point per pixel; misses get [`BACKGROUND_DEPTH`].
pub fn raycast_depth(mesh: &TriangleMesh, width: usize, height: usize) -> Result<DepthFrame> {
    let hits = cast_rays(mesh, width, height)?;
    Ok(DepthFrame {
        depth: hits.depth(),
        mask: hits.mask(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(side: usize, f: impl Fn(f64, f64) -> [f64; 3]) -> TriangleMesh {
        let n = (side - 1) as f64;
        let pos = (0..side * side)
            .map(|k| {
                let (x, y) = (-1.0 + 2.0 * (k % side) as f64 / n, -1.0 + 2.0 * (k / side) as f64 / n);
                f(x, y)
            })
            .collect();
        TriangleMesh::from_grid(side, pos).unwrap()
    }

    #[test]
    fn flat_square_constant_depth() {
        let m = square(17, |x, y| [x, y, 0.37]);
        let d = raycast_depth(&m, 32, 32).unwrap();
        assert!(d.mask.iter().all(|&h| h));
        assert!(d.depth.data().iter().all(|&z| z == 0.37));
    }

    #[test]
    fn tilted_square_is_linear_ramp() {
        let a: f64 = 0.4;
        let m = square(9, |x, y| [x, y * a.cos(), y * a.sin()]);
        let d = raycast_depth(&m, 64, 64).unwrap();
        for j in 0..64 {
            let y = pixel_center(j, 64);
            for i in 0..64 {
                let inside = y.abs() < a.cos();
                let hit = d.mask[j * 64 + i];
                if (y.abs() - a.cos()).abs() > 1e-9 {
                    assert_eq!(hit, inside, "pixel ({i},{j})");
                }
                if hit {
                    assert!((d.depth.get(i, j) - y * a.tan()).abs() < 1e-9);
                } else {
                    assert_eq!(d.depth.get(i, j), BACKGROUND_DEPTH);
                }
            }
        }
    }

    #[test]
    fn nearest_of_two_layers_wins() {
        let lower = square(5, |x, y| [x, y, 0.0]);
        let upper = square(5, |x, y| [x, y, 1.0]);
        let mut pos = lower.positions().to_vec();
        let off = pos.len() as u32;
        pos.extend_from_slice(upper.positions());
        let mut uvs = lower.uvs().to_vec();
        uvs.extend_from_slice(upper.uvs());
        let mut tris = upper.triangles().iter().map(|t| t.map(|i| i + off)).collect::<Vec<_>>();
        tris.extend_from_slice(lower.triangles());
        let both = TriangleMesh::new(pos, uvs, tris).unwrap();
        let d = raycast_depth(&both, 16, 16).unwrap();
        assert!(d.depth.data().iter().all(|&z| z == 1.0));
    }

    #[test]
    fn degenerate_triangles_skipped() {
        let pos = vec![[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let m = TriangleMesh::new(pos, vec![[0.0; 2]; 3], vec![[0, 1, 2]]).unwrap();
        let d = raycast_depth(&m, 4, 4).unwrap();
        assert!(d.mask.iter().all(|&h| !h));
    }

    #[test]
    fn z_translation_shifts_depth_exactly() {
        let m = square(17, |x, y| [x * 0.9, y * 0.8, (3.0 * x).sin() * (2.0 * y).cos() * 0.3]);
        let c = 2.75;
        let a = raycast_depth(&m, 48, 48).unwrap();
        let b = raycast_depth(&m.translated([0.0, 0.0, c]), 48, 48).unwrap();
        assert_eq!(a.mask, b.mask);
        for (i, (za, zb)) in a.depth.data().iter().zip(b.depth.data()).enumerate() {
            if a.mask[i] {
                assert!((zb - za - c).abs() <= 1e-12);
            }
        }
    }
}
