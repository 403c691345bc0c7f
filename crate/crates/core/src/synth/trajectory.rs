use crate::error::{Error, Result};

use super::params::TrajectoryParams;

pub type Mat3 = [[f64; 3]; 3];

/// Per-frame rigid motion `x -> R x + T` of the patch.
#[derive(Clone, Debug, PartialEq)]
pub struct EuclideanTrajectory {
    rotations: Vec<Mat3>,
    translations: Vec<[f64; 3]>,
}

/// Sample time of frame `k` out of `frames`, uniform over `[0, 1]` inclusive.
#[inline]
pub fn frame_time(k: usize, frames: usize) -> f64 {
    if frames <= 1 {
        0.0
    } else {
        k as f64 / (frames - 1) as f64
    }
}

/// Rotation by `angle` about unit `axis` (Rodrigues).
pub fn axis_angle(axis: [f64; 3], angle: f64) -> Mat3 {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let k = 1.0 - c;
    [
        [c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        [y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        [z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ]
}

impl EuclideanTrajectory {
    pub fn from_params(p: &TrajectoryParams, frames: usize) -> Result<Self> {
        let n = (p.axis[0] * p.axis[0] + p.axis[1] * p.axis[1] + p.axis[2] * p.axis[2]).sqrt();
        if !(n > 0.0) {
            return Err(Error::Parameter("trajectory axis must be non-zero".into()));
        }
        let axis = [p.axis[0] / n, p.axis[1] / n, p.axis[2] / n];
        let mut rotations = Vec::with_capacity(frames);
        let mut translations = Vec::with_capacity(frames);
        for k in 0..frames {
            let t = frame_time(k, frames);
            let angle = p.rotation_amplitude * (p.omega * t + p.rotation_phase).cos();
            rotations.push(axis_angle(axis, angle));
            let mut tr = [0.0; 3];
            for i in 0..3 {
                tr[i] = p.translation_amplitude[i] * (p.omega * t + p.translation_phase[i]).cos();
            }
            translations.push(tr);
        }
        Ok(Self {
            rotations,
            translations,
        })
    }

    pub fn identity(frames: usize) -> Self {
        Self::from_parts(vec![axis_angle([0.0, 0.0, 1.0], 0.0); frames], vec![[0.0; 3]; frames])
    }

    pub fn from_parts(rotations: Vec<Mat3>, translations: Vec<[f64; 3]>) -> Self {
        assert_eq!(rotations.len(), translations.len());
        Self {
            rotations,
            translations,
        }
    }

    pub fn frames(&self) -> usize {
        self.rotations.len()
    }

    pub fn rotation(&self, k: usize) -> &Mat3 {
        &self.rotations[k]
    }

    pub fn translation(&self, k: usize) -> [f64; 3] {
        self.translations[k]
    }

    #[inline]
    pub fn apply(&self, k: usize, p: [f64; 3]) -> [f64; 3] {
        let r = &self.rotations[k];
        let t = self.translations[k];
        [
            r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2] + t[0],
            r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2] + t[1],
            r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2] + t[2],
        ]
    }
}

/// Angle of the relative rotation `A^T B`.
pub fn relative_angle(a: &Mat3, b: &Mat3) -> f64 {
    let mut tr = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr += a[k][i] * b[k][i];
        }
    }
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_params(rng: &mut SeededRng) -> TrajectoryParams {
        TrajectoryParams {
            axis: rng.unit_vector(),
            rotation_amplitude: rng.uniform(0.0, 0.5),
            rotation_phase: rng.uniform(0.0, 6.28),
            translation_amplitude: [rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)],
            translation_phase: [rng.uniform(0.0, 6.28), rng.uniform(0.0, 6.28), rng.uniform(0.0, 6.28)],
            omega: std::f64::consts::PI,
        }
    }

    #[test]
    fn rotations_are_orthonormal() {
        let mut rng = SeededRng::new(21);
        for _ in 0..20 {
            let tr = EuclideanTrajectory::from_params(&random_params(&mut rng), 16).unwrap();
            for k in 0..16 {
                let r = tr.rotation(k);
                for i in 0..3 {
                    for j in 0..3 {
                        let dot: f64 = (0..3).map(|m| r[m][i] * r[m][j]).sum();
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((dot - expect).abs() < 1e-12);
                    }
                }
                let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
                    - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
                    + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
                assert!((det - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_to_frame_rotation_is_bounded() {
        let mut rng = SeededRng::new(22);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let frames = 16;
            let tr = EuclideanTrajectory::from_params(&p, frames).unwrap();
            let max_step = p.rotation_amplitude * p.omega / (frames - 1) as f64;
            for k in 1..frames {
                let a = relative_angle(tr.rotation(k - 1), tr.rotation(k));
                assert!(a <= max_step + 1e-9, "{a} > {max_step}");
            }
        }
    }

    #[test]
    fn frame_times_cover_unit_interval() {
        assert_eq!(frame_time(0, 16), 0.0);
        assert_eq!(frame_time(15, 16), 1.0);
        assert_eq!(frame_time(0, 1), 0.0);
    }
}
