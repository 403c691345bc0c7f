use std::path::{Path, PathBuf};

use nrdk_core::dataset::{write_dataset, Dataset, Manifest, CLIPS_FILE};
use nrdk_core::render::{load_rgb, ClipDigest, ClipSample};
use nrdk_core::{Error, Result, VideoTensor};
use serde::{Deserialize, Serialize};

const FRAME_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

/// A grayscale video to reconstruct, with the digest of the clip it came from.
#[derive(Clone, Debug)]
pub struct InputVideo {
    pub video: VideoTensor,
    pub digest: ClipDigest,
}

fn is_frame_dir(path: &Path) -> bool {
    path.is_dir() && !path.join(CLIPS_FILE).exists()
}

/// Clips of a container (or dataset directory), or one video from a directory of frame images.
pub fn load_input_videos(path: &Path) -> Result<Vec<InputVideo>> {
    if is_frame_dir(path) {
        return Ok(vec![InputVideo {
            video: load_frames(path)?,
            digest: ClipDigest::default(),
        }]);
    }
    Ok(Dataset::load(path)?
        .clips
        .into_iter()
        .map(|c| InputVideo {
            video: c.grayscale(),
            digest: c.digest,
        })
        .collect())
}

/// Images of `dir` sorted by file name, converted to luma and stacked in time.
pub fn load_frames(dir: &Path) -> Result<VideoTensor> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    if files.is_empty() {
        return Err(Error::config("in", format!("no frame images in {}", dir.display())));
    }
    files.sort();
    let frames = files
        .iter()
        .map(|f| Ok(load_rgb(f)?.to_grayscale()?.frame(0)))
        .collect::<Result<Vec<_>>>()?;
    VideoTensor::from_frames(&frames)
}

/// Depth-only clip: every pixel valid, the source video as render.
pub fn depth_clip(render: VideoTensor, depth: VideoTensor, digest: ClipDigest) -> Result<ClipSample> {
    let mask = vec![true; depth.data().len()];
    ClipSample::new(render, depth, mask, digest)
}

/// Writes `clips` to `path` (or `path/clips.nrsd` if `path` is a directory) plus manifest.
pub fn write_clips(path: &Path, clips: &[ClipSample], source: serde_json::Value) -> Result<PathBuf> {
    let container = if path.is_dir() { path.join(CLIPS_FILE) } else { path.to_path_buf() };
    if let Some(parent) = container.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let template = Manifest {
        source: Some(source),
        ..Manifest::new()
    };
    write_dataset(&container, 0, template, clips)?;
    Ok(container)
}

/// Depth videos of a container or dataset directory.
pub fn load_depths(path: &Path) -> Result<Vec<VideoTensor>> {
    Ok(Dataset::load(path)?.clips.into_iter().map(|c| c.depth).collect())
}

/// One written preview image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreviewEntry {
    pub file: String,
    pub clip: usize,
    pub frame: usize,
    pub kind: String,
    /// Value mapped to black.
    pub min: f64,
    /// Value mapped to white.
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreviewMeta {
    pub depth_normalization: String,
    pub render_normalization: String,
    pub images: Vec<PreviewEntry>,
}

impl PreviewMeta {
    pub fn new() -> Self {
        Self {
            depth_normalization: "per-frame min-max: each depth frame is stretched to the full 8-bit range for visibility, so gray levels are not comparable across frames".into(),
            render_normalization: "none: render values in [0, 1] map to [0, 255]".into(),
            images: Vec::new(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join("preview.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(&path, e))
    }
}

impl Default for PreviewMeta {
    fn default() -> Self {
        Self::new()
    }
}

fn save_png(path: &Path, img: image::DynamicImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// One 8-bit grayscale PNG per depth frame, each stretched to its own min..max.
pub fn write_depth_previews(dir: &Path, clip: usize, depth: &VideoTensor, meta: &mut PreviewMeta) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h, _, _) = depth.dims();
    for (k, f) in depth.frames_iter().enumerate() {
        let (lo, hi) = f.data().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let span = hi - lo;
        let bytes = f
            .data()
            .iter()
            .map(|&v| if span > 0.0 { to_byte((v - lo) / span) } else { 0 })
            .collect();
        let name = format!("clip{clip:04}_depth_t{k:02}.png");
        let img = image::GrayImage::from_raw(w as u32, h as u32, bytes).expect("buffer matches frame size");
        save_png(&dir.join(&name), image::DynamicImage::ImageLuma8(img))?;
        meta.images.push(PreviewEntry {
            file: name,
            clip,
            frame: k,
            kind: "depth".into(),
            min: lo,
            max: hi,
        });
    }
    Ok(())
}

/// Render frames as they are (gray or RGB), clamped to `[0, 1]`.
pub fn write_render_previews(dir: &Path, clip: usize, render: &VideoTensor, meta: &mut PreviewMeta) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h, t, c) = render.dims();
    let frame_len = w * h * c;
    for k in 0..t {
        let bytes: Vec<u8> = render.data()[k * frame_len..(k + 1) * frame_len].iter().map(|&v| to_byte(v)).collect();
        let img = match c {
            1 => image::DynamicImage::ImageLuma8(image::GrayImage::from_raw(w as u32, h as u32, bytes).expect("frame size")),
            3 => image::DynamicImage::ImageRgb8(image::RgbImage::from_raw(w as u32, h as u32, bytes).expect("frame size")),
            _ => return Err(Error::Shape(format!("cannot preview {c}-channel renders"))),
        };
        let name = format!("clip{clip:04}_render_t{k:02}.png");
        save_png(&dir.join(&name), img)?;
        meta.images.push(PreviewEntry {
            file: name,
            clip,
            frame: k,
            kind: "render".into(),
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_preview_spans_full_range() {
        let dir = tempfile::tempdir().unwrap();
        let depth = VideoTensor::from_fn(4, 3, 2, 1, |i, j, t, _| (i + j) as f64 * (t + 1) as f64 - 5.0);
        let mut meta = PreviewMeta::new();
        write_depth_previews(dir.path(), 0, &depth, &mut meta).unwrap();
        assert_eq!(meta.images.len(), 2);
        for e in &meta.images {
            let img = image::open(dir.path().join(&e.file)).unwrap().to_luma8();
            let px: Vec<u8> = img.pixels().map(|p| p.0[0]).collect();
            assert_eq!(*px.iter().min().unwrap(), 0);
            assert_eq!(*px.iter().max().unwrap(), 255);
        }
        assert_eq!((meta.images[1].min, meta.images[1].max), (-5.0, 5.0));
    }

    #[test]
    fn frames_dir_loads_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        for (name, level) in [("b.png", 200u8), ("a.png", 10u8)] {
            image::GrayImage::from_pixel(5, 4, image::Luma([level])).save(dir.path().join(name)).unwrap();
        }
        let v = load_frames(dir.path()).unwrap();
        assert_eq!(v.dims(), (5, 4, 2, 1));
        assert!((v.get(0, 0, 0, 0) - 10.0 / 255.0).abs() < 1e-12);
        assert!((v.get(0, 0, 1, 0) - 200.0 / 255.0).abs() < 1e-12);
    }
}
