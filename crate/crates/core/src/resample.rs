//! Spatial resampling of videos, frame by frame and channel by channel.

use crate::error::{Error, Result};
use crate::tensor::{Frame, VideoTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResampleMode {
    /// Pixel-center aligned bilinear interpolation with edge clamping.
    Bilinear,
    /// Mean of each 2x2 block; target must be exactly half the source.
    AveragePool2x,
}

pub fn resample(v: &VideoTensor, new_w: usize, new_h: usize, mode: ResampleMode) -> Result<VideoTensor> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::Size(format!("resample target {new_w}x{new_h}")));
    }
    let (w, h, t, c) = v.dims();
    match mode {
        ResampleMode::AveragePool2x => {
            if w % 2 != 0 || h % 2 != 0 || new_w * 2 != w || new_h * 2 != h {
                return Err(Error::Size(format!(
                    "average-pool-2x maps {w}x{h} to {}x{}, not {new_w}x{new_h}",
                    w / 2,
                    h / 2
                )));
            }
            Ok(VideoTensor::from_fn(new_w, new_h, t, c, |x, y, tt, cc| {
                0.25 * (v.get(2 * x, 2 * y, tt, cc)
                    + v.get(2 * x + 1, 2 * y, tt, cc)
                    + v.get(2 * x, 2 * y + 1, tt, cc)
                    + v.get(2 * x + 1, 2 * y + 1, tt, cc))
            }))
        }
        ResampleMode::Bilinear => {
            let xs = taps(w, new_w);
            let ys = taps(h, new_h);
            Ok(VideoTensor::from_fn(new_w, new_h, t, c, |x, y, tt, cc| {
                let (x0, x1, fx) = xs[x];
                let (y0, y1, fy) = ys[y];
                let top = lerp(v.get(x0, y0, tt, cc), v.get(x1, y0, tt, cc), fx);
                let bot = lerp(v.get(x0, y1, tt, cc), v.get(x1, y1, tt, cc), fx);
                lerp(top, bot, fy)
            }))
        }
    }
}

/// Single-frame convenience wrapper around [`resample`].
pub fn resample_frame(f: &Frame, new_w: usize, new_h: usize, mode: ResampleMode) -> Result<Frame> {
    let v = VideoTensor::from_frames(std::slice::from_ref(f))?;
    Ok(resample(&v, new_w, new_h, mode)?.frame(0))
}

/// Repeated 2x average pooling while the source is at least twice the target,
/// then a final bilinear step to the exact size.
pub fn downsize(v: &VideoTensor, new_w: usize, new_h: usize) -> Result<VideoTensor> {
    let mut cur = v.clone();
    while cur.width() >= 2 * new_w
        && cur.height() >= 2 * new_h
        && cur.width() % 2 == 0
        && cur.height() % 2 == 0
    {
        cur = resample(&cur, cur.width() / 2, cur.height() / 2, ResampleMode::AveragePool2x)?;
    }
    if cur.width() == new_w && cur.height() == new_h {
        Ok(cur)
    } else {
        resample(&cur, new_w, new_h, ResampleMode::Bilinear)
    }
}

#[inline]
fn lerp(a: f64, b: f64, f: f64) -> f64 {
    if f == 0.0 {
        a
    } else {
        a + (b - a) * f
    }
}

/// For each destination index: the two source taps and the blend weight.
fn taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}
