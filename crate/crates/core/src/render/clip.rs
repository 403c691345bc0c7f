use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::GeneratorConfig;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::synth::{build_surface, sample_params, DeformationParams, EuclideanTrajectory, PhaseField};
use crate::tensor::VideoTensor;

use super::mesh::TriangleMesh;
use super::raycast::cast_rays;
use super::shade::{shade_hits, LightRig, Material};
use super::texture::TextureSource;

// child stream ids of a clip's rng
const PARAMS_STREAM: u64 = 0;
const PHASE_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const LOOK_STREAM: u64 = 3;
const TEXTURE_STREAM: u64 = 4;

/// Scalar material settings, as recorded in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub ambient: f64,
    pub diffuse: f64,
    pub specular: f64,
    pub shininess: f64,
    pub texture: String,
}

/// Everything needed to regenerate a clip.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub seed: u64,
    pub stream: u64,
    pub deformation: DeformationParams,
    pub material: MaterialParams,
    pub light: LightRig,
    pub noise_sigma: f64,
}

impl ClipMeta {
    /// SHA-256 of the canonical JSON encoding.
    pub fn param_hash(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("metadata serializes");
        Sha256::digest(&json).into()
    }

    pub fn digest(&self) -> ClipDigest {
        ClipDigest {
            seed: self.seed,
            stream: self.stream,
            param_hash: self.param_hash(),
        }
    }
}

/// Fixed-size per-clip record stored in the binary container.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClipDigest {
    pub seed: u64,
    pub stream: u64,
    pub param_hash: [u8; 32],
}

impl ClipDigest {
    pub fn hash_hex(&self) -> String {
        self.param_hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One dataset entry: rendered video, depth video and the per-pixel hit mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipSample {
    pub render: VideoTensor,
    pub depth: VideoTensor,
    /// `width * height * frames` flags in depth layout; `false` where the ray missed.
    pub mask: Vec<bool>,
    pub digest: ClipDigest,
    pub meta: Option<ClipMeta>,
}

impl ClipSample {
    pub fn new(render: VideoTensor, depth: VideoTensor, mask: Vec<bool>, digest: ClipDigest) -> Result<Self> {
        if depth.channels() != 1 {
            return Err(Error::Shape(format!("depth must have 1 channel, got {}", depth.channels())));
        }
        if mask.len() != depth.data().len() {
            return Err(Error::Shape(format!(
                "mask has {} entries for {} depth samples",
                mask.len(),
                depth.data().len()
            )));
        }
        if !render.is_finite() || !depth.is_finite() {
            return Err(Error::NonFinite("clip".into()));
        }
        Ok(Self {
            render,
            depth,
            mask,
            digest,
            meta: None,
        })
    }

    /// Rendered video as one luma channel.
    pub fn grayscale(&self) -> VideoTensor {
        self.render.to_grayscale().expect("render has 1 or 3 channels")
    }

    pub fn hit_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len().max(1) as f64
    }
}

/// Rounds through `f32`, the storage precision of the container.
#[inline]
pub fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every sample, then clamps to `[0, 1]`.
pub fn add_noise(video: &mut VideoTensor, sigma: f64, rng: &mut SeededRng) {
    for v in video.data_mut() {
        if sigma > 0.0 {
            *v += sigma * rng.normal();
        }
        *v = v.clamp(0.0, 1.0);
    }
}

/// Renders `p.frames` frames at `resolution^2`: shaded RGB with pixel noise,
/// plus ray-cast depth and hit mask. Phase and noise come from child streams
/// of `rng`, so the clip is a function of `(p, mat, light, noise_sigma, rng)`.
pub fn make_clip(
    p: &DeformationParams,
    mat: &Material,
    light: &LightRig,
    noise_sigma: f64,
    resolution: usize,
    rng: &SeededRng,
) -> Result<ClipSample> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Parameter(format!("noise sigma {noise_sigma}")));
    }
    p.validate()?;
    let phase = PhaseField::sample(&mut rng.child(PHASE_STREAM), p.grid_n, p.phase_speed_scale);
    let traj = EuclideanTrajectory::from_params(&p.trajectory, p.frames)?;
    let surface = build_surface(p, &phase, &traj)?;

    let (r, t) = (resolution, p.frames);
    let mut render = VideoTensor::zeros(r, r, t, 3);
    let mut depth = VideoTensor::zeros(r, r, t, 1);
    let mut mask = Vec::with_capacity(r * r * t);
    for k in 0..t {
        let mesh = TriangleMesh::from_surface_frame(&surface, k)?;
        let hits = cast_rays(&mesh, r, r)?;
        let shaded = shade_hits(&hits, &mesh, mat, light);
        depth.set_frame(k, &hits.depth())?;
        mask.extend(hits.mask());
        for c in 0..3 {
            render.set_frame_channel(k, c, &shaded.frame_channel(0, c))?;
        }
    }
    add_noise(&mut render, noise_sigma, &mut rng.child(NOISE_STREAM));
    let render = render.map(quantize);
    let depth = depth.map(quantize);

    let meta = ClipMeta {
        seed: rng.seed(),
        stream: rng.stream(),
        deformation: p.clone(),
        material: MaterialParams {
            ambient: mat.ambient,
            diffuse: mat.diffuse,
            specular: mat.specular,
            shininess: mat.shininess,
            texture: String::new(),
        },
        light: light.clone(),
        noise_sigma,
    };
    let mut clip = ClipSample::new(render, depth, mask, meta.digest())?;
    clip.meta = Some(meta);
    Ok(clip)
}

/// Draws clip `index` of a dataset with root `seed`: deformation, material,
/// light, texture and noise level all come from `cfg`'s ranges.
pub fn sample_clip(cfg: &GeneratorConfig, textures: &TextureSource, seed: u64, index: u64) -> Result<ClipSample> {
    cfg.validate()?;
    let rng = SeededRng::new(seed).child(index);
    let p = sample_params(&mut rng.child(PARAMS_STREAM), &cfg.deformation, &cfg.clip)?;

    let rr = &cfg.render;
    let mut look = rng.child(LOOK_STREAM);
    let mut draw = |r: crate::config::Range| look.uniform(r.lo(), r.hi());
    let (ambient, diffuse, specular, shininess) =
        (draw(rr.ambient), draw(rr.diffuse), draw(rr.specular), draw(rr.shininess));
    let elevation = draw(rr.light_elevation);
    let azimuth = draw(rr.light_azimuth);
    let intensity = draw(rr.light_intensity);
    let ambient_intensity = draw(rr.ambient_intensity);
    let noise_sigma = draw(rr.noise_sigma);
    let contrast = draw(rr.texture_contrast);

    let tex = textures.sample(&mut rng.child(TEXTURE_STREAM), contrast)?;
    let mat = Material::new(tex.image, ambient, diffuse, specular, shininess)?;
    let dir = [
        elevation.sin() * azimuth.cos(),
        elevation.sin() * azimuth.sin(),
        elevation.cos(),
    ];
    let light = LightRig::new(dir, [intensity; 3], ambient_intensity)?;

    let mut clip = make_clip(&p, &mat, &light, noise_sigma, cfg.clip.resolution, &rng)?;
    if let Some(meta) = clip.meta.as_mut() {
        meta.material.texture = tex.origin;
        clip.digest = meta.digest();
    }
    if cfg.clip.grayscale {
        clip.render = clip.render.to_grayscale()?.map(quantize);
    }
    Ok(clip)
}
