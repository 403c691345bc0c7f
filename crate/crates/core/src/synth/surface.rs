use crate::error::{Error, Result};

use super::field::{displacement_field, grid_coord, PhaseField};
use super::params::DeformationParams;
use super::trajectory::{frame_time, EuclideanTrajectory};

/// Deforming patch sampled on a `(grid_n + 1)^2` vertex grid per frame.
///
/// Vertex `(i, j)` has parameter-domain coordinates `(-1 + 2i/n, -1 + 2j/n)`,
/// so the grid spans the closed bi-unit square; the displacement is periodic on
/// the `n`-point FFT grid and the last row/column reuses the first.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSequence {
    side: usize,
    frames: Vec<Vec<[f64; 3]>>,
}

impl SurfaceSequence {
    pub fn from_frames(side: usize, frames: Vec<Vec<[f64; 3]>>) -> Result<Self> {
        if side < 2 {
            return Err(Error::Size(format!("vertex grid side {side} < 2")));
        }
        for (k, f) in frames.iter().enumerate() {
            if f.len() != side * side {
                return Err(Error::Shape(format!(
                    "frame {k} has {} vertices, expected {}",
                    f.len(),
                    side * side
                )));
            }
            if f.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("vertex position in frame {k}")));
            }
        }
        Ok(Self { side, frames })
    }

    /// Vertices per side.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn vertices(&self, k: usize) -> &[[f64; 3]] {
        &self.frames[k]
    }

    /// Parameter-domain coordinates of vertex `(i, j)`.
    pub fn param_coord(&self, i: usize, j: usize) -> (f64, f64) {
        let n = self.side - 1;
        (grid_coord(i, n), grid_coord(j, n))
    }
}

/// Evaluates `f(x, t_k) = E_{t_k}(x + d(x, t_k))` on the vertex grid for every frame.
pub fn build_surface(
    p: &DeformationParams,
    phase: &PhaseField,
    traj: &EuclideanTrajectory,
) -> Result<SurfaceSequence> {
    if traj.frames() != p.frames {
        return Err(Error::Shape(format!(
            "trajectory has {} frames, params {}",
            traj.frames(),
            p.frames
        )));
    }
    let n = p.grid_n;
    let side = n + 1;
    let mut frames = Vec::with_capacity(p.frames);
    for k in 0..p.frames {
        let d = displacement_field(p, phase, frame_time(k, p.frames))?;
        let mut verts = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                let (x, y) = (grid_coord(i, n), grid_coord(j, n));
                let (pi, pj) = (i % n, j % n);
                let local = [
                    x + d.get(pi, pj, 0, 0),
                    y + d.get(pi, pj, 0, 1),
                    d.get(pi, pj, 0, 2),
                ];
                verts.push(traj.apply(k, local));
            }
        }
        frames.push(verts);
    }
    SurfaceSequence::from_frames(side, frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ClipShape, DeformationRanges};
    use crate::fft::signed_frequency;
    use crate::rng::SeededRng;
    use crate::synth::sample_params;

    #[test]
    fn flat_patch_without_motion() {
        let p = DeformationParams::flat(16, 3);
        let phase = PhaseField::sample(&mut SeededRng::new(0), 16, 1.0);
        let s = build_surface(&p, &phase, &EuclideanTrajectory::identity(3)).unwrap();
        assert_eq!(s.side(), 17);
        for k in 0..3 {
            for j in 0..17 {
                for i in 0..17 {
                    let v = s.vertices(k)[j * 17 + i];
                    let (x, y) = s.param_coord(i, j);
                    assert_eq!(v, [x, y, 0.0]);
                }
            }
        }
    }

    #[test]
    fn pure_translation_lifts_plane() {
        let p = DeformationParams::flat(8, 2);
        let phase = PhaseField::sample(&mut SeededRng::new(0), 8, 1.0);
        let r = EuclideanTrajectory::identity(2);
        let traj = EuclideanTrajectory::from_parts(
            (0..2).map(|k| *r.rotation(k)).collect(),
            vec![[0.0, 0.0, 0.7]; 2],
        );
        let s = build_surface(&p, &phase, &traj).unwrap();
        assert!(s.vertices(1).iter().all(|v| v[2] == 0.7));
    }

    #[test]
    fn consecutive_frames_move_within_bound() {
        let mut rng = SeededRng::new(77);
        let shape = ClipShape {
            grid_n: 32,
            ..Default::default()
        };
        for _ in 0..5 {
            let p = sample_params(&mut rng, &DeformationRanges::default(), &shape).unwrap();
            let phase = PhaseField::sample(&mut rng, p.grid_n, p.phase_speed_scale);
            let traj = EuclideanTrajectory::from_params(&p.trajectory, p.frames).unwrap();
            let s = build_surface(&p, &phase, &traj).unwrap();

            // speed bound: |d'| from spectral mass, rotation and translation rates
            let n = p.grid_n;
            let mut mass = 0.0;
            for ky in 0..n {
                for kx in 0..n {
                    let a = p.spectral_amplitude(signed_frequency(kx, n), signed_frequency(ky, n));
                    mass += a * phase.phi(kx, ky, 0);
                }
            }
            let d_speed = 3f64.sqrt() * p.kappa * p.zeta.max(1.0) * mass / n as f64;
            let tp = &p.trajectory;
            let t_speed = tp.omega * tp.translation_amplitude.iter().map(|a| a * a).sum::<f64>().sqrt();
            let radius = s
                .vertices(0)
                .iter()
                .map(|v| {
                    let t0 = traj.translation(0);
                    ((v[0] - t0[0]).powi(2) + (v[1] - t0[1]).powi(2) + (v[2] - t0[2]).powi(2)).sqrt()
                })
                .fold(0.0, f64::max)
                + 1.0;
            let r_speed = tp.rotation_amplitude * tp.omega * radius;
            let bound = (d_speed + t_speed + r_speed) / (p.frames - 1) as f64;

            // dense time sampling oracle for the actual step size
            for k in 1..p.frames {
                let step = s
                    .vertices(k)
                    .iter()
                    .zip(s.vertices(k - 1))
                    .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
                    .fold(0.0, f64::max);
                assert!(step <= bound, "frame {k}: {step} > {bound}");
            }
        }
    }

    #[test]
    fn frame_count_mismatch() {
        let p = DeformationParams::flat(8, 4);
        let phase = PhaseField::sample(&mut SeededRng::new(0), 8, 1.0);
        assert!(build_surface(&p, &phase, &EuclideanTrajectory::identity(3)).is_err());
    }
}
