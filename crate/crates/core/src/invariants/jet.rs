use crate::error::{Error, Result};
use crate::tensor::Frame;

/// Smallest frame on which a jet has interior pixels away from the filter support.
pub const MIN_JET_SIDE: usize = 5;

/// Per-pixel second-order prolongation `(z, z_x, z_y, z_xx, z_xy, z_yy)`.
///
/// Central differences with the physical pixel pitch `h = 2 / W` (resp. `2 / H`):
/// `z_x = [-1, 0, 1] / 2h`, `z_xx = [1, -2, 1] / h^2`, and `z_xy` is the `y`
/// filter applied to the `x` filter, so `z_xy == z_yx` by construction.
/// The one-pixel border is invalid and holds zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondOrderJet {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) hx: f64,
    pub(crate) hy: f64,
    pub(crate) z: Vec<f64>,
    pub(crate) zx: Vec<f64>,
    pub(crate) zy: Vec<f64>,
    pub(crate) zxx: Vec<f64>,
    pub(crate) zxy: Vec<f64>,
    pub(crate) zyy: Vec<f64>,
    /// Largest `|z|` over the frame; sets the rounding floor of the filters.
    pub(crate) z_scale: f64,
}

impl SecondOrderJet {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Pixel pitch `(hx, hy)` in world units.
    pub fn pitch(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    #[inline]
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + 1 < self.width && j + 1 < self.height
    }

    /// `[z, z_x, z_y, z_xx, z_xy, z_yy]` at pixel `(i, j)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 6] {
        let k = j * self.width + i;
        [self.z[k], self.zx[k], self.zy[k], self.zxx[k], self.zxy[k], self.zyy[k]]
    }

    /// Frobenius norm of the Hessian, four-entry form `sqrt(z_xx^2 + z_xy^2 + z_yx^2 + z_yy^2)`.
    #[inline]
    pub fn hessian_norm(&self, i: usize, j: usize) -> f64 {
        let k = j * self.width + i;
        hessian_norm(self.zxx[k], self.zxy[k], self.zyy[k])
    }

    /// Hessian norms below this are indistinguishable from filter rounding noise.
    pub fn rounding_floor(&self) -> f64 {
        let h2 = self.hx.min(self.hy).powi(2);
        1e4 * f64::EPSILON * self.z_scale.max(f64::MIN_POSITIVE) / h2
    }
}

#[inline]
pub fn hessian_norm(zxx: f64, zxy: f64, zyy: f64) -> f64 {
    (zxx * zxx + 2.0 * zxy * zxy + zyy * zyy).sqrt()
}

pub fn jet(z: &Frame) -> Result<SecondOrderJet> {
    let (w, h) = (z.width(), z.height());
    if w < MIN_JET_SIDE || h < MIN_JET_SIDE {
        return Err(Error::Size(format!(
            "jet needs at least {MIN_JET_SIDE}x{MIN_JET_SIDE} pixels, got {w}x{h}"
        )));
    }
    if z.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("depth frame".into()));
    }
    let (hx, hy) = (2.0 / w as f64, 2.0 / h as f64);
    let (cx, cy) = (0.5 / hx, 0.5 / hy);
    let (cxx, cyy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let n = w * h;
    let d = z.data();
    let mut out = SecondOrderJet {
        width: w,
        height: h,
        hx,
        hy,
        z: d.to_vec(),
        zx: vec![0.0; n],
        zy: vec![0.0; n],
        zxx: vec![0.0; n],
        zxy: vec![0.0; n],
        zyy: vec![0.0; n],
        z_scale: z.max_abs(),
    };
    let dx = |i: usize, j: usize| (d[j * w + i + 1] - d[j * w + i - 1]) * cx;
    for j in 1..h - 1 {
        for i in 1..w - 1 {
            let k = j * w + i;
            out.zx[k] = dx(i, j);
            out.zy[k] = (d[k + w] - d[k - w]) * cy;
            out.zxx[k] = (d[k + 1] - 2.0 * d[k] + d[k - 1]) * cxx;
            out.zyy[k] = (d[k + w] - 2.0 * d[k] + d[k - w]) * cyy;
            out.zxy[k] = (dx(i, j + 1) - dx(i, j - 1)) * cy;
        }
    }
    Ok(out)
}

/// Sensitivities of a scalar with respect to the jet components, one entry per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct JetGrad {
    pub zx: Vec<f64>,
    pub zy: Vec<f64>,
    pub zxx: Vec<f64>,
    pub zxy: Vec<f64>,
    pub zyy: Vec<f64>,
}

impl JetGrad {
    pub fn zeros(n: usize) -> Self {
        Self {
            zx: vec![0.0; n],
            zy: vec![0.0; n],
            zxx: vec![0.0; n],
            zxy: vec![0.0; n],
            zyy: vec![0.0; n],
        }
    }
}

/// Adjoint of [`jet`]'s derivative filters: maps jet sensitivities back to
/// depth sensitivities by scattering each interior stencil transposed.
pub fn jet_adjoint(width: usize, height: usize, g: &JetGrad) -> Vec<f64> {
    let (w, h) = (width, height);
    let (hx, hy) = (2.0 / w as f64, 2.0 / h as f64);
    let (cx, cy) = (0.5 / hx, 0.5 / hy);
    let (cxx, cyy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let cxy = cx * cy;
    let mut out = vec![0.0; w * h];
    for j in 1..h - 1 {
        for i in 1..w - 1 {
            let k = j * w + i;
            let (gx, gy, gxx, gxy, gyy) = (g.zx[k] * cx, g.zy[k] * cy, g.zxx[k] * cxx, g.zxy[k] * cxy, g.zyy[k] * cyy);
            out[k + 1] += gx + gxx;
            out[k - 1] += -gx + gxx;
            out[k + w] += gy + gyy;
            out[k - w] += -gy + gyy;
            out[k] -= 2.0 * (gxx + gyy);
            out[k + w + 1] += gxy;
            out[k + w - 1] -= gxy;
            out[k - w + 1] -= gxy;
            out[k - w - 1] += gxy;
        }
    }
    out
}
