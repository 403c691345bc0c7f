use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::VideoTensor;

use super::mesh::{dot, TriangleMesh};
use super::raycast::{cast_rays, HitBuffer};

/// Viewing direction of the orthographic camera (toward the viewer).
pub const VIEW_DIR: [f64; 3] = [0.0, 0.0, 1.0];

/// Background color of pixels whose ray misses the surface.
pub const BACKGROUND_SHADE: f64 = 0.0;

/// Phong material with an RGB texture over the patch parameter domain.
#[derive(Clone, Debug)]
pub struct Material {
    texture: VideoTensor,
    pub ambient: f64,
    pub diffuse: f64,
    pub specular: f64,
    pub shininess: f64,
}

impl Material {
    pub fn new(texture: VideoTensor, ambient: f64, diffuse: f64, specular: f64, shininess: f64) -> Result<Self> {
        if texture.channels() != 3 || texture.frames() != 1 || texture.width() == 0 || texture.height() == 0 {
            return Err(Error::Shape(format!(
                "texture must be a single RGB image, got {:?}",
                texture.dims()
            )));
        }
        if !texture.is_finite() {
            return Err(Error::NonFinite("texture".into()));
        }
        for (name, v) in [("ambient", ambient), ("diffuse", diffuse), ("specular", specular)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("{name} coefficient {v} outside [0, 1]")));
            }
        }
        if !(shininess >= 1.0) {
            return Err(Error::Parameter(format!("shininess {shininess} < 1")));
        }
        Ok(Self {
            texture,
            ambient,
            diffuse,
            specular,
            shininess,
        })
    }

    /// Uniformly colored material.
    pub fn solid(rgb: [f64; 3], ambient: f64, diffuse: f64, specular: f64, shininess: f64) -> Result<Self> {
        Self::new(VideoTensor::from_fn(1, 1, 1, 3, |_, _, _, c| rgb[c]), ambient, diffuse, specular, shininess)
    }

    pub fn texture(&self) -> &VideoTensor {
        &self.texture
    }

    /// Bilinear lookup at `uv` in `[0, 1]^2`, clamped at the edges.
    pub fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let (w, h) = (self.texture.width(), self.texture.height());
        let fx = (u * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
        let fy = (v * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
        let mut out = [0.0; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let t = &self.texture;
            let top = t.get(x0, y0, 0, c) * (1.0 - ax) + t.get(x1, y0, 0, c) * ax;
            let bot = t.get(x0, y1, 0, c) * (1.0 - ax) + t.get(x1, y1, 0, c) * ax;
            *o = top * (1.0 - ay) + bot * ay;
        }
        out
    }
}

/// One directional light plus ambient illumination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightRig {
    direction: [f64; 3],
    pub intensity: [f64; 3],
    pub ambient: f64,
}

impl LightRig {
    /// `direction` points from the surface toward the light and is normalized here.
    pub fn new(direction: [f64; 3], intensity: [f64; 3], ambient: f64) -> Result<Self> {
        let n = dot(direction, direction).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Parameter("light direction must be non-zero".into()));
        }
        if intensity.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || !(ambient >= 0.0) {
            return Err(Error::Parameter("light intensities must be >= 0".into()));
        }
        Ok(Self {
            direction: [direction[0] / n, direction[1] / n, direction[2] / n],
            intensity,
            ambient,
        })
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }
}

/// Phong radiance for one channel; not clamped.
#[inline]
pub fn phong(n: [f64; 3], tex: f64, mat: &Material, light: &LightRig, c: usize) -> f64 {
    let l = light.direction;
    let ndl = dot(n, l);
    let r = [2.0 * ndl * n[0] - l[0], 2.0 * ndl * n[1] - l[1], 2.0 * ndl * n[2] - l[2]];
    let rdv = dot(r, VIEW_DIR).max(0.0);
    let spec = if mat.specular > 0.0 && rdv > 0.0 {
        mat.specular * rdv.powf(mat.shininess)
    } else {
        0.0
    };
    mat.ambient * light.ambient * tex + light.intensity[c] * (mat.diffuse * tex * ndl.max(0.0) + spec)
}

/// Shades hits already cast; returns an RGB frame clamped to `[0, 1]`.
pub fn shade_hits(hits: &HitBuffer, mesh: &TriangleMesh, mat: &Material, light: &LightRig) -> VideoTensor {
    let (w, h) = (hits.width(), hits.height());
    let normals = mesh.normals();
    let uvs = mesh.uvs();
    let tris = mesh.triangles();
    let mut out = VideoTensor::filled(w, h, 1, 3, BACKGROUND_SHADE);
    for y in 0..h {
        for x in 0..w {
            let Some(hit) = hits.get(x, y) else { continue };
            let [i0, i1, i2] = tris[hit.triangle as usize].map(|i| i as usize);
            let b0 = 1.0 - hit.b1 - hit.b2;
            let mut n = [0.0; 3];
            for k in 0..3 {
                n[k] = b0 * normals[i0][k] + hit.b1 * normals[i1][k] + hit.b2 * normals[i2][k];
            }
            let len = dot(n, n).sqrt();
            n = if len > 0.0 { [n[0] / len, n[1] / len, n[2] / len] } else { VIEW_DIR };
            // two-sided: back faces seen through folds are lit like front faces
            if dot(n, VIEW_DIR) < 0.0 {
                n = [-n[0], -n[1], -n[2]];
            }
            let u = b0 * uvs[i0][0] + hit.b1 * uvs[i1][0] + hit.b2 * uvs[i2][0];
            let v = b0 * uvs[i0][1] + hit.b1 * uvs[i1][1] + hit.b2 * uvs[i2][1];
            let tex = mat.sample(u, v);
            for c in 0..3 {
                out.set(x, y, 0, c, phong(n, tex[c], mat, light, c).clamp(0.0, 1.0));
            }
        }
    }
    out
}

/// Ray-casts and shades one `width x height` RGB frame.
pub fn shade_frame(
    mesh: &TriangleMesh,
    mat: &Material,
    light: &LightRig,
    width: usize,
    height: usize,
) -> Result<VideoTensor> {
    let hits = cast_rays(mesh, width, height)?;
    Ok(shade_hits(&hits, mesh, mat, light))
}
