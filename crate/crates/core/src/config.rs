//! Generator configuration: parameter ranges for deformation, material,
//! lighting and noise, plus the clip geometry.
//!
//! Loaded from JSON; unknown keys are rejected. Every range is written as a
//! two-element array `[lo, hi]` and drawn uniformly unless noted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64);

impl Range {
    pub fn fixed(v: f64) -> Self {
        Range(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.0 && v <= self.1
    }

    /// Checks ordering and that both ends lie in `[min, max]`.
    pub fn validate(&self, key: &str, min: f64, max: f64) -> Result<()> {
        if !self.0.is_finite() || !self.1.is_finite() {
            return Err(Error::config(key, "bounds must be finite"));
        }
        if self.0 > self.1 {
            return Err(Error::config(
                key,
                format!("inverted range: lo {} > hi {}", self.0, self.1),
            ));
        }
        if self.0 < min || self.1 > max {
            return Err(Error::config(
                key,
                format!("range [{}, {}] outside allowed [{min}, {max}]", self.0, self.1),
            ));
        }
        Ok(())
    }

    /// As [`Range::validate`] but with a strictly positive lower bound.
    pub fn validate_positive(&self, key: &str) -> Result<()> {
        self.validate(key, 0.0, f64::INFINITY)?;
        if self.0 <= 0.0 {
            return Err(Error::config(key, "lower bound must be > 0"));
        }
        Ok(())
    }
}

/// Which way the spatial envelope of the displacement points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopePolarity {
    /// `exp(-nu |x|^2)`: displacement fades toward the border as `nu` grows.
    #[default]
    Center,
    /// `1 - exp(-nu |x|^2)`: displacement fades toward the center.
    Border,
}

/// How the per-frequency phase `t * phi + theta` enters the spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    /// Complex phasor `A exp(i(t phi + theta))`; the real part of its inverse
    /// transform is a sum of travelling cosines with random spatial phases.
    #[default]
    Travelling,
    /// Real amplitude `A cos(t phi + theta)`; the real part of the inverse
    /// transform is then point-symmetric about the patch center.
    Standing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeformationRanges {
    /// Displacement intensity.
    pub kappa: Range,
    /// Spatial envelope precision.
    pub nu: Range,
    /// Folding factor applied to the two tangential channels.
    pub zeta: Range,
    /// Spectral envelope precision (flexibility).
    pub xi: Range,
    /// Eigenvalues of the orientation matrix, drawn log-uniformly.
    pub sigma_eigenvalues: Range,
    /// Radial high-pass scale `r0` of `w(r) = 1 - exp(-(r/r0)^p)`.
    pub w_r0: Range,
    /// Radial high-pass exponent `p`.
    pub w_p: Range,
    /// Scale of the dispersion `phi(u) = s |u|`.
    pub phase_speed: Range,
    /// Peak rotation angle of the rigid trajectory, radians.
    pub rotation_amplitude: Range,
    /// Peak translation magnitude of the rigid trajectory.
    pub translation_amplitude: Range,
    /// Angular frequency of the rigid trajectory over the clip time `[0, 1]`.
    pub trajectory_omega: f64,
    pub envelope: EnvelopePolarity,
    pub phase_mode: PhaseMode,
}

impl Default for DeformationRanges {
    fn default() -> Self {
        Self {
            kappa: Range(2.0, 4.0),
            nu: Range(0.0, 1.0),
            zeta: Range(0.0, 0.5),
            xi: Range(0.01, 0.04),
            sigma_eigenvalues: Range(0.02, 0.2),
            w_r0: Range(1.0, 2.0),
            w_p: Range(2.0, 4.0),
            phase_speed: Range(0.5, 2.0),
            rotation_amplitude: Range(0.0, 0.25),
            translation_amplitude: Range(0.0, 0.1),
            trajectory_omega: std::f64::consts::PI,
            envelope: EnvelopePolarity::Center,
            phase_mode: PhaseMode::Travelling,
        }
    }
}

impl DeformationRanges {
    pub fn validate(&self) -> Result<()> {
        self.kappa.validate("deformation.kappa", 0.0, f64::INFINITY)?;
        self.nu.validate("deformation.nu", 0.0, f64::INFINITY)?;
        self.zeta.validate("deformation.zeta", 0.0, f64::INFINITY)?;
        self.xi.validate_positive("deformation.xi")?;
        self.sigma_eigenvalues
            .validate_positive("deformation.sigma_eigenvalues")?;
        self.w_r0.validate_positive("deformation.w_r0")?;
        self.w_p.validate("deformation.w_p", 1.0, f64::INFINITY)?;
        self.phase_speed
            .validate("deformation.phase_speed", 0.0, f64::INFINITY)?;
        self.rotation_amplitude
            .validate("deformation.rotation_amplitude", 0.0, std::f64::consts::PI)?;
        self.translation_amplitude
            .validate("deformation.translation_amplitude", 0.0, f64::INFINITY)?;
        if !(self.trajectory_omega.is_finite() && self.trajectory_omega >= 0.0) {
            return Err(Error::config("deformation.trajectory_omega", "must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderRanges {
    pub ambient: Range,
    pub diffuse: Range,
    pub specular: Range,
    pub shininess: Range,
    /// Angle between the light direction and the camera axis `+z`, radians.
    pub light_elevation: Range,
    /// Direction of the light in the image plane, radians from `+x` towards `+y`.
    /// An image of `z` lit from azimuth `a` equals one of `-z` lit from `a + pi`,
    /// so ranges of width `pi` or more make the sign of the curvature unobservable.
    pub light_azimuth: Range,
    /// Per-channel directional light intensity.
    pub light_intensity: Range,
    pub ambient_intensity: Range,
    /// Standard deviation of the Gaussian pixel noise added after rendering.
    pub noise_sigma: Range,
    /// Peak-to-peak amplitude of procedural textures around their base color.
    pub texture_contrast: Range,
}

impl Default for RenderRanges {
    fn default() -> Self {
        Self {
            ambient: Range(0.05, 0.2),
            diffuse: Range(0.6, 0.9),
            specular: Range(0.0, 0.3),
            shininess: Range(4.0, 40.0),
            light_elevation: Range(0.2, 0.9),
            light_azimuth: Range(-std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_3),
            light_intensity: Range(0.8, 1.0),
            ambient_intensity: Range(0.8, 1.0),
            noise_sigma: Range(0.0, 0.02),
            texture_contrast: Range(0.05, 0.3),
        }
    }
}

impl RenderRanges {
    pub fn validate(&self) -> Result<()> {
        self.ambient.validate("render.ambient", 0.0, 1.0)?;
        self.diffuse.validate("render.diffuse", 0.0, 1.0)?;
        self.specular.validate("render.specular", 0.0, 1.0)?;
        self.shininess.validate("render.shininess", 1.0, f64::INFINITY)?;
        self.light_elevation
            .validate("render.light_elevation", 0.0, std::f64::consts::FRAC_PI_2)?;
        self.light_azimuth
            .validate("render.light_azimuth", -2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)?;
        self.light_intensity
            .validate("render.light_intensity", 0.0, f64::INFINITY)?;
        self.ambient_intensity
            .validate("render.ambient_intensity", 0.0, f64::INFINITY)?;
        self.noise_sigma.validate("render.noise_sigma", 0.0, f64::INFINITY)?;
        self.texture_contrast
            .validate("render.texture_contrast", 0.0, 1.0)?;
        Ok(())
    }
}

/// Output geometry of one clip.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClipShape {
    /// Rendered frame side, pixels.
    pub resolution: usize,
    pub frames: usize,
    /// FFT grid side for the displacement field; the mesh has `grid_n + 1` vertices per side.
    pub grid_n: usize,
    /// Store one luma channel instead of RGB.
    pub grayscale: bool,
}

impl Default for ClipShape {
    fn default() -> Self {
        Self {
            resolution: 64,
            frames: 16,
            grid_n: 64,
            grayscale: false,
        }
    }
}

impl ClipShape {
    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 {
            return Err(Error::config("clip.resolution", "must be > 0"));
        }
        if self.frames == 0 {
            return Err(Error::config("clip.frames", "must be > 0"));
        }
        if self.grid_n < 2 || !self.grid_n.is_power_of_two() {
            return Err(Error::config("clip.grid_n", "must be a power of two >= 2"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub clip: ClipShape,
    pub deformation: DeformationRanges,
    pub render: RenderRanges,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.clip.validate()?;
        self.deformation.validate()?;
        self.render.validate()
    }

    /// Parses and validates a JSON config. Missing keys take defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: GeneratorConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(unknown_key(&e.to_string()).unwrap_or("<json>"), e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn unknown_key(msg: &str) -> Option<&str> {
    let start = msg.find("unknown field `")? + "unknown field `".len();
    let end = msg[start..].find('`')? + start;
    Some(&msg[start..end])
}
