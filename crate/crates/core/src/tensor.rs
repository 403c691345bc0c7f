//! Dense scalar grids: multi-channel videos and single-channel frames.
//!
//! Layout is frame-major, then row-major, then channel-interleaved:
//! `data[((t * height + y) * width + x) * channels + c]`.
//!
//! Pixel `(i, j)` of a `W x H` frame sits at world coordinates
//! `x = -1 + (2i + 1) / W`, `y = -1 + (2j + 1) / H`, i.e. pixel centers tile
//! the open bi-unit square. Row index grows with `y`.

use crate::error::{Error, Result};

/// World coordinate of the center of pixel `i` on an axis with `n` pixels.
#[inline]
pub fn pixel_center(i: usize, n: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / n as f64
}

/// Dense `W x H x T x C` grid of 64-bit floats.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoTensor {
    width: usize,
    height: usize,
    frames: usize,
    channels: usize,
    data: Vec<f64>,
}

impl VideoTensor {
    pub fn zeros(width: usize, height: usize, frames: usize, channels: usize) -> Self {
        Self::filled(width, height, frames, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, frames: usize, channels: usize, value: f64) -> Self {
        Self {
            width,
            height,
            frames,
            channels,
            data: vec![value; width * height * frames * channels],
        }
    }

    /// Wraps an existing buffer, checking its length and that every value is finite.
    pub fn from_vec(
        width: usize,
        height: usize,
        frames: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        let expected = width * height * frames * channels;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "buffer of {} values for a {width}x{height}x{frames}x{channels} tensor ({expected} expected)",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor element {pos}")));
        }
        Ok(Self {
            width,
            height,
            frames,
            channels,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        frames: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * frames * channels);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    for c in 0..channels {
                        data.push(f(x, y, t, c));
                    }
                }
            }
        }
        Self {
            width,
            height,
            frames,
            channels,
            data,
        }
    }

    /// Stacks single-channel frames into a one-channel video.
    pub fn from_frames(frames: &[Frame]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Size("cannot build a video from zero frames".into()))?;
        let (w, h) = (first.width(), first.height());
        let mut data = Vec::with_capacity(w * h * frames.len());
        for (k, f) in frames.iter().enumerate() {
            if f.width() != w || f.height() != h {
                return Err(Error::Shape(format!(
                    "frame {k} is {}x{}, expected {w}x{h}",
                    f.width(),
                    f.height()
                )));
            }
            data.extend_from_slice(f.data());
        }
        Self::from_vec(w, h, frames.len(), 1, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(width, height, frames, channels)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.width, self.height, self.frames, self.channels)
    }

    pub fn same_shape(&self, other: &VideoTensor) -> bool {
        self.dims() == other.dims()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, t: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && t < self.frames && c < self.channels);
        ((t * self.height + y) * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize, c: usize) -> f64 {
        self.data[self.index(x, y, t, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, t: usize, c: usize, v: f64) {
        let i = self.index(x, y, t, c);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Channel `c` of frame `t`.
    pub fn frame_channel(&self, t: usize, c: usize) -> Frame {
        let mut out = Vec::with_capacity(self.width * self.height);
        let stride = self.channels;
        let start = t * self.width * self.height * stride;
        for p in 0..self.width * self.height {
            out.push(self.data[start + p * stride + c]);
        }
        Frame {
            width: self.width,
            height: self.height,
            data: out,
        }
    }

    /// Channel 0 of frame `t`.
    pub fn frame(&self, t: usize) -> Frame {
        self.frame_channel(t, 0)
    }

    pub fn frames_iter(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.frames).map(move |t| self.frame(t))
    }

    pub fn set_frame_channel(&mut self, t: usize, c: usize, frame: &Frame) -> Result<()> {
        if frame.width != self.width || frame.height != self.height {
            return Err(Error::Shape(format!(
                "frame {}x{} does not fit video {}x{}",
                frame.width, frame.height, self.width, self.height
            )));
        }
        let stride = self.channels;
        let start = t * self.width * self.height * stride;
        for (p, v) in frame.data.iter().enumerate() {
            self.data[start + p * stride + c] = *v;
        }
        Ok(())
    }

    pub fn set_frame(&mut self, t: usize, frame: &Frame) -> Result<()> {
        self.set_frame_channel(t, 0, frame)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> VideoTensor {
        VideoTensor {
            width: self.width,
            height: self.height,
            frames: self.frames,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Luma conversion `0.299 R + 0.587 G + 0.114 B`. One-channel input is returned unchanged.
    pub fn to_grayscale(&self) -> Result<VideoTensor> {
        match self.channels {
            1 => Ok(self.clone()),
            3 => {
                let data = self
                    .data
                    .chunks_exact(3)
                    .map(|rgb| 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2])
                    .collect();
                VideoTensor::from_vec(self.width, self.height, self.frames, 1, data)
            }
            c => Err(Error::Shape(format!(
                "grayscale conversion needs 1 or 3 channels, got {c}"
            ))),
        }
    }

    /// Sub-block `[x0, x0+w) x [y0, y0+h) x [t0, t0+t)` with all channels.
    pub fn crop(&self, x0: usize, y0: usize, t0: usize, w: usize, h: usize, t: usize) -> Result<VideoTensor> {
        if x0 + w > self.width || y0 + h > self.height || t0 + t > self.frames {
            return Err(Error::Size(format!(
                "crop {w}x{h}x{t} at ({x0},{y0},{t0}) exceeds {}x{}x{}",
                self.width, self.height, self.frames
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * t * c);
        for tt in t0..t0 + t {
            for y in y0..y0 + h {
                let start = self.index(x0, y, tt, 0);
                data.extend_from_slice(&self.data[start..start + w * c]);
            }
        }
        Ok(VideoTensor {
            width: w,
            height: h,
            frames: t,
            channels: c,
            data,
        })
    }
}

/// Single-channel `W x H` grid, typically one depth map.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "buffer of {} values for a {width}x{height} frame",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Samples `f(x, y)` at the world coordinates of every pixel center.
    pub fn from_world_fn(width: usize, height: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(width, height, |i, j| {
            f(pixel_center(i, width), pixel_center(j, height))
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// World coordinates of pixel `(i, j)`.
    #[inline]
    pub fn world(&self, i: usize, j: usize) -> (f64, f64) {
        (pixel_center(i, self.width), pixel_center(j, self.height))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Frame> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Size(format!(
                "crop {w}x{h} at ({x0},{y0}) exceeds {}x{}",
                self.width, self.height
            )));
        }
        Ok(Frame::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }
}
