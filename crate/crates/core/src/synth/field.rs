use crate::config::PhaseMode;
use crate::error::{Error, Result};
use crate::fft::{ifft2, signed_frequency, ComplexGrid};
use crate::rng::SeededRng;
use crate::tensor::VideoTensor;

use super::params::DeformationParams;

/// Initial phase and angular speed of every frequency, per displacement channel.
///
/// Stored `grid_n x grid_n x 3`, indexed `(ky * n + kx) * 3 + c` with FFT bin order.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseField {
    n: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
}

impl PhaseField {
    /// `theta` i.i.d. uniform in `[0, 2 pi)`, `phi(u) = speed_scale * |u|` on all channels.
    pub fn sample(rng: &mut SeededRng, n: usize, speed_scale: f64) -> Self {
        let mut theta = Vec::with_capacity(n * n * 3);
        let mut phi = Vec::with_capacity(n * n * 3);
        for ky in 0..n {
            for kx in 0..n {
                let (ux, uy) = (signed_frequency(kx, n), signed_frequency(ky, n));
                let speed = speed_scale * (ux * ux + uy * uy).sqrt();
                for _ in 0..3 {
                    theta.push(rng.uniform(0.0, 2.0 * std::f64::consts::PI));
                    phi.push(speed);
                }
            }
        }
        Self { n, theta, phi }
    }

    pub fn new(n: usize, theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if theta.len() != n * n * 3 || phi.len() != n * n * 3 {
            return Err(Error::Shape(format!("phase field for n={n} needs {} entries", n * n * 3)));
        }
        if phi.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Parameter("angular speeds must be >= 0".into()));
        }
        Ok(Self { n, theta, phi })
    }

    pub fn grid_n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn theta(&self, kx: usize, ky: usize, c: usize) -> f64 {
        self.theta[(ky * self.n + kx) * 3 + c]
    }

    #[inline]
    pub fn phi(&self, kx: usize, ky: usize, c: usize) -> f64 {
        self.phi[(ky * self.n + kx) * 3 + c]
    }

    pub fn max_phi(&self) -> f64 {
        self.phi.iter().cloned().fold(0.0, f64::max)
    }
}

/// World coordinate of periodic sample `j` on the `n`-point displacement grid: `-1 + 2j/n`.
#[inline]
pub fn grid_coord(j: usize, n: usize) -> f64 {
    -1.0 + 2.0 * j as f64 / n as f64
}

fn check(p: &DeformationParams, phase: &PhaseField, t: f64) -> Result<()> {
    p.validate()?;
    if phase.n != p.grid_n {
        return Err(Error::Shape(format!(
            "phase field grid {} does not match params grid {}",
            phase.n, p.grid_n
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("time {t} outside [0, 1]")));
    }
    Ok(())
}

/// Displacement before the spatial envelope: per channel, the real part of the
/// inverse transform of `A(u) * phase(t)`, scaled by `kappa * diag(zeta, zeta, 1)`.
///
/// Returned as an `n x n x 1 x 3` tensor on the periodic grid [`grid_coord`].
/// Its spatial mean is zero because `w(0) = 0` removes the DC bin.
pub fn spectral_displacement(p: &DeformationParams, phase: &PhaseField, t: f64) -> Result<VideoTensor> {
    check(p, phase, t)?;
    let n = p.grid_n;
    let amplitude: Vec<f64> = (0..n * n)
        .map(|i| p.spectral_amplitude(signed_frequency(i % n, n), signed_frequency(i / n, n)))
        .collect();
    let channel_scale = [p.kappa * p.zeta, p.kappa * p.zeta, p.kappa];

    let mut out = VideoTensor::zeros(n, n, 1, 3);
    for c in 0..3 {
        if channel_scale[c] == 0.0 {
            continue;
        }
        let mut spec = ComplexGrid::zeros(n, n);
        for ky in 0..n {
            for kx in 0..n {
                let a = amplitude[ky * n + kx];
                if a == 0.0 {
                    continue;
                }
                let psi = t * phase.phi(kx, ky, c) + phase.theta(kx, ky, c);
                match p.phase_mode {
                    PhaseMode::Travelling => spec.set(kx, ky, a * psi.cos(), a * psi.sin()),
                    PhaseMode::Standing => spec.set(kx, ky, a * psi.cos(), 0.0),
                }
            }
        }
        let field = ifft2(&spec)?;
        for (i, v) in field.re().iter().enumerate() {
            out.set(i % n, i / n, 0, c, channel_scale[c] * v);
        }
    }
    Ok(out)
}

/// Full displacement `d(., t)` on the periodic `n x n` grid: the spectral field
/// times the spatial envelope.
pub fn displacement_field(p: &DeformationParams, phase: &PhaseField, t: f64) -> Result<VideoTensor> {
    let mut d = spectral_displacement(p, phase, t)?;
    let n = p.grid_n;
    for y in 0..n {
        for x in 0..n {
            let env = p.envelope_at(grid_coord(x, n), grid_coord(y, n));
            for c in 0..3 {
                let v = d.get(x, y, 0, c);
                d.set(x, y, 0, c, v * env);
            }
        }
    }
    Ok(d)
}
