use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::gbr::GbrParams;
use super::jet::{hessian_norm, SecondOrderJet};

/// Default relative degeneracy threshold, against the frame-median Hessian norm.
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InvariantKind {
    /// Full GBR group: normalized Hessian `(z_xx, z_xy, z_yy) / |H|`.
    Gbr,
    /// Stretch and translation along `z`: `(z_x, z_y, z_xx, z_xy, z_yx, z_yy) / |H|`.
    TrSc,
}

impl InvariantKind {
    pub fn channels(self) -> usize {
        match self {
            InvariantKind::Gbr => 3,
            InvariantKind::TrSc => 6,
        }
    }
}

/// Invariant values per pixel (channel-interleaved, row-major) plus validity.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantField {
    pub kind: InvariantKind,
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl InvariantField {
    pub fn channels(&self) -> usize {
        self.kind.channels()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.values[(j * self.width + i) * self.channels() + c]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.width + i]
    }

    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let c = self.channels();
        let k = (j * self.width + i) * c;
        &self.values[k..k + c]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Interior pixels whose Hessian norm clears both the relative threshold
/// `eps * median` and the rounding floor of the filters.
pub fn degeneracy_mask(jet: &SecondOrderJet, eps: f64) -> Vec<bool> {
    let (w, h) = (jet.width, jet.height);
    let mut norms = vec![0.0; w * h];
    let mut interior = Vec::with_capacity(w * h);
    for j in 1..h - 1 {
        for i in 1..w - 1 {
            let n = jet.hessian_norm(i, j);
            norms[j * w + i] = n;
            interior.push(n);
        }
    }
    let threshold = (eps * median(interior)).max(jet.rounding_floor());
    (0..w * h)
        .map(|k| jet.is_interior(k % w, k / w) && norms[k] > threshold && norms[k].is_finite())
        .collect()
}

fn build(jet: &SecondOrderJet, eps: f64, kind: InvariantKind) -> InvariantField {
    let mask = degeneracy_mask(jet, eps);
    let ch = kind.channels();
    let mut values = vec![0.0; jet.width * jet.height * ch];
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        let (zx, zy, zxx, zxy, zyy) = (jet.zx[k], jet.zy[k], jet.zxx[k], jet.zxy[k], jet.zyy[k]);
        let inv = 1.0 / hessian_norm(zxx, zxy, zyy);
        let out = &mut values[k * ch..(k + 1) * ch];
        match kind {
            InvariantKind::Gbr => out.copy_from_slice(&[zxx * inv, zxy * inv, zyy * inv]),
            InvariantKind::TrSc => {
                out.copy_from_slice(&[zx * inv, zy * inv, zxx * inv, zxy * inv, zxy * inv, zyy * inv])
            }
        }
    }
    InvariantField {
        kind,
        width: jet.width,
        height: jet.height,
        values,
        mask,
    }
}

/// GBR invariant: the Hessian over its Frobenius norm, stored `(xx, xy, yy)`.
pub fn iota(jet: &SecondOrderJet, eps: f64) -> InvariantField {
    build(jet, eps, InvariantKind::Gbr)
}

/// Stretch/translation invariant: gradient and Hessian over the Hessian norm.
pub fn eta(jet: &SecondOrderJet, eps: f64) -> InvariantField {
    build(jet, eps, InvariantKind::TrSc)
}

pub fn invariant(jet: &SecondOrderJet, eps: f64, kind: InvariantKind) -> InvariantField {
    build(jet, eps, kind)
}

/// Group element normalizing the surface at pixel `(i, j)`: afterwards
/// `z = z_x = z_y = 0` and `|H| = 1` there.
pub fn moving_frame(jet: &SecondOrderJet, i: usize, j: usize, eps: f64) -> Result<GbrParams> {
    if !jet.is_interior(i, j) {
        return Err(Error::Degenerate(format!("pixel ({i},{j}) is on the border")));
    }
    let n = jet.hessian_norm(i, j);
    if !(n >= eps.max(jet.rounding_floor())) {
        return Err(Error::Degenerate(format!("Hessian norm {n:e} at pixel ({i},{j})")));
    }
    let [z, zx, zy, ..] = jet.at(i, j);
    let x = crate::tensor::pixel_center(i, jet.width);
    let y = crate::tensor::pixel_center(j, jet.height);
    let (alpha, beta, lambda) = (-zx / n, -zy / n, 1.0 / n);
    let tau = -(alpha * x + beta * y + lambda * z);
    GbrParams::new(alpha, beta, lambda, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{gbr_apply, jet};
    use crate::tensor::Frame;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn interior_all(f: &InvariantField, expect: &[f64]) {
        for j in 1..f.height - 1 {
            for i in 1..f.width - 1 {
                assert!(f.is_valid(i, j));
                for (c, e) in expect.iter().enumerate() {
                    assert!((f.get(i, j, c) - e).abs() < 1e-9, "({i},{j}) c{c}: {}", f.get(i, j, c));
                }
            }
        }
    }

    #[test]
    fn iota_closed_forms() {
        let bowl = jet(&Frame::from_world_fn(16, 16, |x, y| 0.5 * (x * x + y * y))).unwrap();
        interior_all(&iota(&bowl, DEFAULT_EPS), &[R, 0.0, R]);
        let saddle = jet(&Frame::from_world_fn(16, 16, |x, y| x * y)).unwrap();
        interior_all(&iota(&saddle, DEFAULT_EPS), &[0.0, R, 0.0]);
        let cyl = jet(&Frame::from_world_fn(16, 16, |x, _| 0.5 * x * x)).unwrap();
        interior_all(&iota(&cyl, DEFAULT_EPS), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn eta_on_bowl_matches_formula() {
        let f = eta(&jet(&Frame::from_world_fn(32, 32, |x, y| 0.5 * (x * x + y * y))).unwrap(), DEFAULT_EPS);
        for j in 1..31 {
            for i in 1..31 {
                let (x, y) = Frame::zeros(32, 32).world(i, j);
                let want = [x * R, y * R, R, 0.0, 0.0, R];
                for c in 0..6 {
                    assert!((f.get(i, j, c) - want[c]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn eta_is_scale_shift_invariant() {
        let z = Frame::from_world_fn(24, 20, |x, y| (2.0 * x).sin() * (1.5 * y).cos() + 0.3 * x * y);
        let z2 = z.map(|v| 2.0 * v + 5.0);
        let (a, b) = (eta(&jet(&z).unwrap(), DEFAULT_EPS), eta(&jet(&z2).unwrap(), DEFAULT_EPS));
        for k in 0..a.mask.len() {
            if a.mask[k] && b.mask[k] {
                for c in 0..6 {
                    assert!((a.values[k * 6 + c] - b.values[k * 6 + c]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn plane_is_fully_masked() {
        for z in [
            Frame::from_world_fn(16, 16, |x, y| 0.3 * x - 2.0 * y + 7.0),
            Frame::filled(16, 16, 3.0),
        ] {
            let j = jet(&z).unwrap();
            assert_eq!(iota(&j, DEFAULT_EPS).valid_count(), 0);
            assert_eq!(eta(&j, DEFAULT_EPS).valid_count(), 0);
        }
    }

    #[test]
    fn iota_has_unit_norm() {
        let z = Frame::from_world_fn(20, 20, |x, y| (3.0 * x + y).sin() + (x - 2.0 * y).cos());
        let f = iota(&jet(&z).unwrap(), DEFAULT_EPS);
        assert!(f.valid_count() > 0);
        for k in 0..f.mask.len() {
            if f.mask[k] {
                let v = &f.values[k * 3..k * 3 + 3];
                assert!((v[0] * v[0] + 2.0 * v[1] * v[1] + v[2] * v[2] - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn moving_frame_closed_forms() {
        // origin sits between pixels on even grids, so use an odd grid
        let n = 17;
        let c = n / 2;
        let bowl = jet(&Frame::from_world_fn(n, n, |x, y| 0.5 * (x * x + y * y))).unwrap();
        let g = moving_frame(&bowl, c, c, DEFAULT_EPS).unwrap();
        let want = [0.0, 0.0, R, 0.0];
        for (a, b) in g.as_array().iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{g:?}");
        }
        let cyl = jet(&Frame::from_world_fn(n, n, |x, _| 0.5 * x * x)).unwrap();
        let g = moving_frame(&cyl, c, c, DEFAULT_EPS).unwrap();
        for (a, b) in g.as_array().iter().zip([0.0, 0.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-9, "{g:?}");
        }
    }

    #[test]
    fn moving_frame_rejects_flat_pixels() {
        let j = jet(&Frame::from_world_fn(9, 9, |x, _| x)).unwrap();
        assert!(matches!(moving_frame(&j, 4, 4, DEFAULT_EPS), Err(Error::Degenerate(_))));
        assert!(moving_frame(&j, 0, 4, DEFAULT_EPS).is_err());
    }

    #[test]
    fn normalization_equations_hold() {
        let z = Frame::from_world_fn(32, 32, |x, y| (2.0 * x).sin() + (x * y * 3.0).cos() + 0.2 * y);
        let j = jet(&z).unwrap();
        for (pi, pj) in [(5, 7), (16, 16), (28, 3), (10, 25)] {
            let g = moving_frame(&j, pi, pj, DEFAULT_EPS).unwrap();
            let jn = jet(&gbr_apply(&z, &g).unwrap()).unwrap();
            let [zz, zx, zy, ..] = jn.at(pi, pj);
            assert!(zz.abs() < 1e-9 && zx.abs() < 1e-9 && zy.abs() < 1e-9);
            assert!((jn.hessian_norm(pi, pj) - 1.0).abs() < 1e-9);
        }
    }
}
