use crate::error::{Error, Result};
use crate::synth::SurfaceSequence;

/// Triangulated vertex grid with per-vertex normals and texture coordinates.
#[derive(Clone, Debug)]
pub struct TriangleMesh {
    positions: Vec<[f64; 3]>,
    normals: Vec<[f64; 3]>,
    uvs: Vec<[f64; 2]>,
    triangles: Vec<[u32; 3]>,
}

#[inline]
pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl TriangleMesh {
    /// Two triangles per grid quad, counter-clockwise in the parameter domain
    /// so an undeformed patch faces `+z`. Normals are area-weighted averages of
    /// incident face normals; `uv` spans `[0, 1]^2` over the vertex grid.
    pub fn from_grid(side: usize, positions: Vec<[f64; 3]>) -> Result<Self> {
        if side < 2 || positions.len() != side * side {
            return Err(Error::Shape(format!(
                "grid mesh of side {side} needs {} vertices, got {}",
                side * side,
                positions.len()
            )));
        }
        let mut triangles = Vec::with_capacity(2 * (side - 1) * (side - 1));
        let id = |i: usize, j: usize| (j * side + i) as u32;
        for j in 0..side - 1 {
            for i in 0..side - 1 {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let inv = 1.0 / (side - 1) as f64;
        let uvs = (0..side * side)
            .map(|k| [(k % side) as f64 * inv, (k / side) as f64 * inv])
            .collect();
        Self::new(positions, uvs, triangles)
    }

    pub fn from_surface_frame(surface: &SurfaceSequence, k: usize) -> Result<Self> {
        Self::from_grid(surface.side(), surface.vertices(k).to_vec())
    }

    pub fn new(positions: Vec<[f64; 3]>, uvs: Vec<[f64; 2]>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if uvs.len() != positions.len() {
            return Err(Error::Shape("one uv per vertex required".into()));
        }
        let nv = positions.len() as u32;
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= nv)) {
            return Err(Error::Shape(format!("triangle {t:?} indexes past {nv} vertices")));
        }
        let mut acc = vec![[0.0f64; 3]; positions.len()];
        for t in &triangles {
            let [a, b, c] = t.map(|i| positions[i as usize]);
            // |cross| = 2 * area, so summing raw cross products area-weights
            let n = cross(sub(b, a), sub(c, a));
            for &i in t {
                let v = &mut acc[i as usize];
                v[0] += n[0];
                v[1] += n[1];
                v[2] += n[2];
            }
        }
        let normals = acc
            .into_iter()
            .map(|n| {
                let l = norm(n);
                if l > 0.0 {
                    [n[0] / l, n[1] / l, n[2] / l]
                } else {
                    [0.0, 0.0, 1.0]
                }
            })
            .collect();
        Ok(Self {
            positions,
            normals,
            uvs,
            triangles,
        })
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn normals(&self) -> &[[f64; 3]] {
        &self.normals
    }

    pub fn uvs(&self) -> &[[f64; 2]] {
        &self.uvs
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Rigidly shifts every vertex; normals are unchanged.
    pub fn translated(&self, d: [f64; 3]) -> TriangleMesh {
        let mut m = self.clone();
        for p in &mut m.positions {
            p[0] += d[0];
            p[1] += d[1];
            p[2] += d[2];
        }
        m
    }
}
