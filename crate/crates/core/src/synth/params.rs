use serde::{Deserialize, Serialize};

use crate::config::{ClipShape, DeformationRanges, EnvelopePolarity, PhaseMode};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Parameters of the rigid roto-translation applied to the whole patch.
///
/// Rotation is about a fixed `axis` by `rotation_amplitude * cos(omega t + rotation_phase)`;
/// translation component `i` is `translation_amplitude[i] * cos(omega t + translation_phase[i])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub axis: [f64; 3],
    pub rotation_amplitude: f64,
    pub rotation_phase: f64,
    pub translation_amplitude: [f64; 3],
    pub translation_phase: [f64; 3],
    pub omega: f64,
}

impl TrajectoryParams {
    pub fn identity() -> Self {
        Self {
            axis: [0.0, 0.0, 1.0],
            rotation_amplitude: 0.0,
            rotation_phase: 0.0,
            translation_amplitude: [0.0; 3],
            translation_phase: [0.0; 3],
            omega: 0.0,
        }
    }
}

/// Every knob of the displacement model for one clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub kappa: f64,
    pub nu: f64,
    pub zeta: f64,
    pub xi: f64,
    /// Symmetric positive-definite orientation matrix.
    pub sigma: [[f64; 2]; 2],
    pub w_r0: f64,
    pub w_p: f64,
    pub phase_speed_scale: f64,
    pub grid_n: usize,
    pub frames: usize,
    pub rng_stream: u64,
    pub envelope: EnvelopePolarity,
    pub phase_mode: PhaseMode,
    pub trajectory: TrajectoryParams,
}

impl DeformationParams {
    /// Flat, motionless patch template; handy starting point for tests.
    pub fn flat(grid_n: usize, frames: usize) -> Self {
        Self {
            kappa: 0.0,
            nu: 0.0,
            zeta: 0.0,
            xi: 0.02,
            sigma: [[0.05, 0.0], [0.0, 0.05]],
            w_r0: 1.5,
            w_p: 2.0,
            phase_speed_scale: 1.0,
            grid_n,
            frames,
            rng_stream: 0,
            envelope: EnvelopePolarity::Center,
            phase_mode: PhaseMode::Travelling,
            trajectory: TrajectoryParams::identity(),
        }
    }

    /// Radial high-pass profile `w(r) = 1 - exp(-(r / r0)^p)`; `w(0) == 0`.
    #[inline]
    pub fn w(&self, r: f64) -> f64 {
        -(-(r / self.w_r0).powf(self.w_p)).exp_m1()
    }

    /// Spectral amplitude `w(|u|) exp(-xi |u|^2) exp(-u^T Sigma u)`.
    #[inline]
    pub fn spectral_amplitude(&self, ux: f64, uy: f64) -> f64 {
        let r2 = ux * ux + uy * uy;
        let s = &self.sigma;
        let quad = s[0][0] * ux * ux + 2.0 * s[0][1] * ux * uy + s[1][1] * uy * uy;
        self.w(r2.sqrt()) * (-self.xi * r2).exp() * (-quad).exp()
    }

    /// Spatial envelope at world point `(x, y)`.
    #[inline]
    pub fn envelope_at(&self, x: f64, y: f64) -> f64 {
        let g = (-self.nu * (x * x + y * y)).exp();
        match self.envelope {
            EnvelopePolarity::Center => g,
            EnvelopePolarity::Border => 1.0 - g,
        }
    }

    /// Eigenvalues of `sigma`, ascending.
    pub fn sigma_eigenvalues(&self) -> (f64, f64) {
        sym2_eigenvalues(&self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kappa", self.kappa),
            ("nu", self.nu),
            ("zeta", self.zeta),
            ("phase_speed_scale", self.phase_speed_scale),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.xi > 0.0) || !(self.w_r0 > 0.0) || !(self.w_p >= 1.0) {
            return Err(Error::Parameter(format!(
                "need xi > 0, r0 > 0, p >= 1 (xi={}, r0={}, p={})",
                self.xi, self.w_r0, self.w_p
            )));
        }
        if self.sigma[0][1] != self.sigma[1][0] {
            return Err(Error::Parameter("sigma must be symmetric".into()));
        }
        let (l0, _) = self.sigma_eigenvalues();
        if !(l0 > 0.0) {
            return Err(Error::Parameter(format!(
                "sigma must be positive definite, smallest eigenvalue {l0}"
            )));
        }
        if self.grid_n < 2 || !self.grid_n.is_power_of_two() {
            return Err(Error::Size(format!("grid_n {} is not a power of two", self.grid_n)));
        }
        if self.frames == 0 {
            return Err(Error::Size("frames must be > 0".into()));
        }
        Ok(())
    }
}

pub(crate) fn sym2_eigenvalues(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// Draws one parameter set uniformly from `ranges`.
///
/// `sigma` is built as `R(theta) diag(l1, l2) R(theta)^T` with `theta` uniform
/// in `[0, pi)` and `l1, l2` log-uniform. Deterministic in `(rng seed, rng stream)`.
pub fn sample_params(
    rng: &mut SeededRng,
    ranges: &DeformationRanges,
    shape: &ClipShape,
) -> Result<DeformationParams> {
    ranges.validate()?;
    shape.validate()?;

    let kappa = rng.uniform(ranges.kappa.lo(), ranges.kappa.hi());
    let nu = rng.uniform(ranges.nu.lo(), ranges.nu.hi());
    let zeta = rng.uniform(ranges.zeta.lo(), ranges.zeta.hi());
    let xi = rng.uniform(ranges.xi.lo(), ranges.xi.hi());

    let ev = ranges.sigma_eigenvalues;
    let l1 = rng.log_uniform(ev.lo(), ev.hi());
    let l2 = rng.log_uniform(ev.lo(), ev.hi());
    let theta = rng.uniform(0.0, std::f64::consts::PI);
    let (s, c) = theta.sin_cos();
    let off = (l1 - l2) * c * s;
    let sigma = [
        [l1 * c * c + l2 * s * s, off],
        [off, l1 * s * s + l2 * c * c],
    ];

    let w_r0 = rng.uniform(ranges.w_r0.lo(), ranges.w_r0.hi());
    let w_p = rng.uniform(ranges.w_p.lo(), ranges.w_p.hi());
    let phase_speed_scale = rng.uniform(ranges.phase_speed.lo(), ranges.phase_speed.hi());

    let axis = rng.unit_vector();
    let rotation_amplitude =
        rng.uniform(ranges.rotation_amplitude.lo(), ranges.rotation_amplitude.hi());
    let rotation_phase = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
    let t_mag = rng.uniform(
        ranges.translation_amplitude.lo(),
        ranges.translation_amplitude.hi(),
    );
    let t_dir = rng.unit_vector();
    let translation_phase = [
        rng.uniform(0.0, 2.0 * std::f64::consts::PI),
        rng.uniform(0.0, 2.0 * std::f64::consts::PI),
        rng.uniform(0.0, 2.0 * std::f64::consts::PI),
    ];

    let params = DeformationParams {
        kappa,
        nu,
        zeta,
        xi,
        sigma,
        w_r0,
        w_p,
        phase_speed_scale,
        grid_n: shape.grid_n,
        frames: shape.frames,
        rng_stream: rng.stream(),
        envelope: ranges.envelope,
        phase_mode: ranges.phase_mode,
        trajectory: TrajectoryParams {
            axis,
            rotation_amplitude,
            rotation_phase,
            translation_amplitude: [t_mag * t_dir[0], t_mag * t_dir[1], t_mag * t_dir[2]],
            translation_phase,
            omega: ranges.trajectory_omega,
        },
    };
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Range;

    #[test]
    fn w_vanishes_at_origin() {
        let p = DeformationParams::flat(8, 1);
        assert_eq!(p.w(0.0), 0.0);
        assert!(p.w(10.0) > 0.99);
        assert_eq!(p.spectral_amplitude(0.0, 0.0), 0.0);
    }

    #[test]
    fn degenerate_ranges_give_exact_values() {
        let ranges = DeformationRanges {
            kappa: Range::fixed(1.25),
            nu: Range::fixed(0.5),
            zeta: Range::fixed(0.3),
            xi: Range::fixed(0.02),
            sigma_eigenvalues: Range::fixed(0.1),
            w_r0: Range::fixed(1.5),
            w_p: Range::fixed(2.0),
            phase_speed: Range::fixed(3.0),
            rotation_amplitude: Range::fixed(0.0),
            translation_amplitude: Range::fixed(0.0),
            ..Default::default()
        };
        let p = sample_params(&mut SeededRng::new(4), &ranges, &ClipShape::default()).unwrap();
        assert_eq!(
            (p.kappa, p.nu, p.zeta, p.xi, p.w_r0, p.w_p, p.phase_speed_scale),
            (1.25, 0.5, 0.3, 0.02, 1.5, 2.0, 3.0)
        );
        let (a, b) = p.sigma_eigenvalues();
        assert!((a - 0.1).abs() < 1e-15 && (b - 0.1).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_params() {
        let r = DeformationRanges::default();
        let s = ClipShape::default();
        let a = sample_params(&mut SeededRng::with_stream(7, 3), &r, &s).unwrap();
        let b = sample_params(&mut SeededRng::with_stream(7, 3), &r, &s).unwrap();
        assert_eq!(a, b);
        let c = sample_params(&mut SeededRng::with_stream(7, 4), &r, &s).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sigma_eigenvalues_stay_in_range() {
        let r = DeformationRanges {
            sigma_eigenvalues: Range(0.03, 0.4),
            ..Default::default()
        };
        let mut rng = SeededRng::new(123);
        for _ in 0..1000 {
            let p = sample_params(&mut rng, &r, &ClipShape::default()).unwrap();
            // independent eigen-solve of the 2x2 via the characteristic polynomial
            let (a, b, d) = (p.sigma[0][0], p.sigma[0][1], p.sigma[1][1]);
            let tr = a + d;
            let det = a * d - b * b;
            let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
            for ev in [(tr - disc) / 2.0, (tr + disc) / 2.0] {
                assert!(ev >= 0.03 - 1e-12 && ev <= 0.4 + 1e-12, "eigenvalue {ev}");
            }
            assert_eq!(p.sigma[0][1], p.sigma[1][0]);
        }
    }

    #[test]
    fn inverted_range_is_config_error() {
        let r = DeformationRanges {
            zeta: Range(1.0, 0.0),
            ..Default::default()
        };
        let err = sample_params(&mut SeededRng::new(0), &r, &ClipShape::default()).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "deformation.zeta"));
    }
}
