use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fft::{ifft2, signed_frequency, ComplexGrid};
use crate::rng::SeededRng;
use crate::tensor::VideoTensor;

/// Side of every texture handed to the renderer.
pub const TEXTURE_SIZE: usize = 256;

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

/// Where surface textures come from.
#[derive(Clone, Debug)]
pub enum TextureSource {
    /// Random crops of the images in a directory (sorted by file name).
    Directory(Vec<PathBuf>),
    /// Band-limited random noise around a random base color.
    Procedural,
}

/// Texture plus a short provenance string for the manifest.
#[derive(Clone, Debug)]
pub struct TextureSample {
    pub image: VideoTensor,
    pub origin: String,
}

impl TextureSource {
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(|e| e.to_ascii_lowercase());
            if path.is_file() && ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
                files.push(path);
            }
        }
        if files.is_empty() {
            return Err(Error::config(
                "textures",
                format!("no images found in {}", dir.display()),
            ));
        }
        files.sort();
        Ok(TextureSource::Directory(files))
    }

    /// Draws one `TEXTURE_SIZE^2` RGB texture. `contrast` only affects the procedural source.
    pub fn sample(&self, rng: &mut SeededRng, contrast: f64) -> Result<TextureSample> {
        match self {
            TextureSource::Directory(files) => {
                let path = &files[rng.index(files.len())];
                let img = load_rgb(path)?;
                let (x0, y0) = crop_origin(rng, img.width(), img.height(), TEXTURE_SIZE);
                Ok(TextureSample {
                    image: crop_tiled(&img, x0, y0, TEXTURE_SIZE),
                    origin: format!("{}@{x0},{y0}", path.display()),
                })
            }
            TextureSource::Procedural => Ok(TextureSample {
                image: procedural_texture(rng, TEXTURE_SIZE, contrast),
                origin: "procedural".into(),
            }),
        }
    }
}

/// Loads an image as an RGB tensor with values in `[0, 1]`.
pub fn load_rgb(path: &Path) -> Result<VideoTensor> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.into_raw().into_iter().map(|b| b as f64 / 255.0).collect();
    VideoTensor::from_vec(w, h, 1, 3, data)
}

/// Uniform crop origin: `[0, w - size] x [0, h - size]`, or anywhere in the
/// image when it is smaller than the crop (the crop then tiles it).
pub fn crop_origin(rng: &mut SeededRng, w: usize, h: usize, size: usize) -> (usize, usize) {
    let span = |n: usize| if n >= size { n - size + 1 } else { n };
    (rng.index(span(w)), rng.index(span(h)))
}

/// `size x size` crop starting at `(x0, y0)`, wrapping around the image edges.
pub fn crop_tiled(img: &VideoTensor, x0: usize, y0: usize, size: usize) -> VideoTensor {
    let (w, h) = (img.width(), img.height());
    VideoTensor::from_fn(size, size, 1, img.channels(), |x, y, _, c| {
        img.get((x0 + x) % w, (y0 + y) % h, 0, c)
    })
}

/// Band-limited noise: random-phase spectrum under a Gaussian envelope of
/// random bandwidth, normalized to `[-1, 1]` and added to a random base color
/// with peak-to-peak amplitude `contrast`.
pub fn procedural_texture(rng: &mut SeededRng, size: usize, contrast: f64) -> VideoTensor {
    let bandwidth = rng.log_uniform(4.0, 40.0);
    let base: [f64; 3] = [rng.uniform(0.3, 0.8), rng.uniform(0.3, 0.8), rng.uniform(0.3, 0.8)];
    let tint: [f64; 3] = [rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0), rng.uniform(0.6, 1.0)];
    let mut spec = ComplexGrid::zeros(size, size);
    for ky in 0..size {
        for kx in 0..size {
            let (u, v) = (signed_frequency(kx, size), signed_frequency(ky, size));
            let r2 = u * u + v * v;
            if r2 == 0.0 {
                continue;
            }
            let amp = (-r2 / (2.0 * bandwidth * bandwidth)).exp();
            let ph = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
            spec.set(kx, ky, amp * ph.cos(), amp * ph.sin());
        }
    }
    let field = ifft2(&spec).expect("power-of-two texture size").into_real();
    let peak = field.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    VideoTensor::from_fn(size, size, 1, 3, |x, y, _, c| {
        (base[c] + 0.5 * contrast * tint[c] * field[y * size + x] / peak).clamp(0.0, 1.0)
    })
}
