//! Reconstruction of large depth videos from overlapping patch estimates.
//!
//! The frame is cut into square tiles at 50% overlap (and the clip into
//! temporal windows at 50% overlap). Each tile is predicted independently,
//! aligned frame by frame to a coarse whole-frame prediction with a
//! least-squares GBR fit, weighted by a separable triangle window and
//! accumulated. Dividing by the accumulated weight makes the windows a
//! partition of unity everywhere, borders included.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{gbr_apply, gbr_fit, FitMode, GbrParams};
use crate::resample::{downsize, resample, ResampleMode};
use crate::tensor::{Frame, VideoTensor};

/// Anything that maps a grayscale clip to a depth clip at reduced resolution.
pub trait DepthPredictor: Sync {
    /// `input_side x input_side x frames` grayscale in, `output_side x output_side x frames` depth out.
    fn predict(&self, clip: &VideoTensor) -> Result<VideoTensor>;

    fn input_side(&self) -> usize {
        64
    }

    fn output_side(&self) -> usize {
        32
    }

    fn frames(&self) -> usize {
        16
    }
}

/// Half-sample symmetric triangle of length `n`: `w[k] = 1 - |2 (k + 1/2) / n - 1|`.
/// Shifted copies at hop `n / 2` sum to exactly one.
pub fn triangle_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 1.0 - (2.0 * (k as f64 + 0.5) / n as f64 - 1.0).abs())
        .collect()
}

/// Tile origins along an axis: multiples of `hop`, plus one origin clamped to
/// the far border when the regular grid falls short.
fn origins(n: usize, window: usize, hop: usize) -> Vec<usize> {
    let mut o: Vec<usize> = (0..).map(|k| k * hop).take_while(|&s| s + window <= n).collect();
    if o.last().map_or(true, |&s| s + window < n) {
        o.push(n - window);
    }
    o
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingPlan {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub window: usize,
    pub hop: usize,
    pub t_window: usize,
    pub t_hop: usize,
    pub xs: Vec<usize>,
    pub ys: Vec<usize>,
    pub ts: Vec<usize>,
}

/// Spatial window 64 at hop 32, temporal window 16 at hop 8.
pub fn plan_tiling(width: usize, height: usize, frames: usize) -> Result<TilingPlan> {
    plan_tiling_with(width, height, frames, 64, 32, 16, 8)
}

pub fn plan_tiling_with(
    width: usize,
    height: usize,
    frames: usize,
    window: usize,
    hop: usize,
    t_window: usize,
    t_hop: usize,
) -> Result<TilingPlan> {
    if window == 0 || hop == 0 || hop > window || t_window == 0 || t_hop == 0 || t_hop > t_window {
        return Err(Error::Parameter(format!(
            "tiling window {window}/hop {hop}, temporal {t_window}/{t_hop}"
        )));
    }
    if width < window || height < window {
        return Err(Error::Size(format!("frame {width}x{height} smaller than the {window}px window")));
    }
    if frames < t_window {
        return Err(Error::Size(format!("{frames} frames, temporal window needs {t_window}")));
    }
    Ok(TilingPlan {
        width,
        height,
        frames,
        window,
        hop,
        t_window,
        t_hop,
        xs: origins(width, window, hop),
        ys: origins(height, window, hop),
        ts: origins(frames, t_window, t_hop),
    })
}

impl TilingPlan {
    pub fn tile_count(&self) -> usize {
        self.xs.len() * self.ys.len() * self.ts.len()
    }

    /// Tile origins `(x, y, t)` in accumulation order: time, then rows, then columns.
    pub fn tiles(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.tile_count());
        for &t in &self.ts {
            for &y in &self.ys {
                for &x in &self.xs {
                    out.push((x, y, t));
                }
            }
        }
        out
    }

    /// The same tiling with every spatial size divided by `factor`.
    pub fn scaled_down(&self, factor: usize) -> Result<TilingPlan> {
        let spatial = [self.width, self.height, self.window, self.hop];
        if factor == 0
            || spatial.iter().chain(&self.xs).chain(&self.ys).any(|v| v % factor != 0)
        {
            return Err(Error::Size(format!("tiling of {}x{} not divisible by {factor}", self.width, self.height)));
        }
        Ok(TilingPlan {
            width: self.width / factor,
            height: self.height / factor,
            window: self.window / factor,
            hop: self.hop / factor,
            xs: self.xs.iter().map(|v| v / factor).collect(),
            ys: self.ys.iter().map(|v| v / factor).collect(),
            ..self.clone()
        })
    }

    /// Raw accumulated window weight per sample, `width x height x frames`.
    pub fn weight_sum(&self) -> VideoTensor {
        let (wx, wt) = (triangle_window(self.window), triangle_window(self.t_window));
        let mut acc = VideoTensor::zeros(self.width, self.height, self.frames, 1);
        for (x0, y0, t0) in self.tiles() {
            for k in 0..self.t_window {
                for j in 0..self.window {
                    for i in 0..self.window {
                        let v = acc.get(x0 + i, y0 + j, t0 + k, 0);
                        acc.set(x0 + i, y0 + j, t0 + k, 0, v + wx[i] * wx[j] * wt[k]);
                    }
                }
            }
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TileFitMode {
    Full,
    ScaleShift,
    Identity,
}

/// Alignment chosen for one frame of one tile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileFit {
    pub origin: (usize, usize, usize),
    pub frame: usize,
    pub mode: TileFitMode,
    pub params: GbrParams,
}

/// Full GBR fit, falling back to `(lambda, tau)`, then to the identity.
pub fn align_to_reference(src: &Frame, reference: &Frame) -> (TileFitMode, GbrParams) {
    match gbr_fit(src, reference, None, FitMode::Full) {
        Ok(g) => (TileFitMode::Full, g),
        Err(e1) => match gbr_fit(src, reference, None, FitMode::ScaleShift) {
            Ok(g) => {
                log::debug!("full GBR fit failed ({e1}); using scale/shift");
                (TileFitMode::ScaleShift, g)
            }
            Err(e2) => {
                log::debug!("GBR fits failed ({e1}; {e2}); using identity");
                (TileFitMode::Identity, GbrParams::IDENTITY)
            }
        },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stitched {
    pub depth: VideoTensor,
    pub fits: Vec<TileFit>,
}

/// Aligns each tile estimate to `coarse` and overlap-adds them.
/// `plan` and `coarse` are at the estimates' resolution; `estimates` follow
/// [`TilingPlan::tiles`] order.
pub fn stitch(estimates: &[VideoTensor], coarse: &VideoTensor, plan: &TilingPlan) -> Result<Stitched> {
    let tiles = plan.tiles();
    if estimates.len() != tiles.len() {
        return Err(Error::Shape(format!("{} estimates for {} tiles", estimates.len(), tiles.len())));
    }
    if coarse.dims() != (plan.width, plan.height, plan.frames, 1) {
        return Err(Error::Shape(format!(
            "coarse layer {:?} does not match plan {}x{}x{}",
            coarse.dims(),
            plan.width,
            plan.height,
            plan.frames
        )));
    }
    let tile_dims = (plan.window, plan.window, plan.t_window, 1);
    if let Some(e) = estimates.iter().find(|e| e.dims() != tile_dims) {
        return Err(Error::Shape(format!("tile estimate {:?}, expected {tile_dims:?}", e.dims())));
    }

    let aligned: Vec<(Vec<Frame>, Vec<TileFit>)> = tiles
        .par_iter()
        .zip(estimates.par_iter())
        .map(|(&(x0, y0, t0), est)| -> Result<_> {
            let mut frames = Vec::with_capacity(plan.t_window);
            let mut fits = Vec::with_capacity(plan.t_window);
            for k in 0..plan.t_window {
                let reference = coarse.frame(t0 + k).crop(x0, y0, plan.window, plan.window)?;
                let src = est.frame(k);
                let (mode, params) = align_to_reference(&src, &reference);
                if mode != TileFitMode::Full {
                    log::debug!("tile ({x0},{y0},{t0}) frame {k}: {mode:?} alignment");
                }
                frames.push(gbr_apply(&src, &params)?);
                fits.push(TileFit {
                    origin: (x0, y0, t0),
                    frame: k,
                    mode,
                    params,
                });
            }
            Ok((frames, fits))
        })
        .collect::<Result<_>>()?;

    let (wx, wt) = (triangle_window(plan.window), triangle_window(plan.t_window));
    let mut acc = VideoTensor::zeros(plan.width, plan.height, plan.frames, 1);
    let mut weight = VideoTensor::zeros(plan.width, plan.height, plan.frames, 1);
    let mut fits = Vec::with_capacity(tiles.len() * plan.t_window);
    for (&(x0, y0, t0), (frames, tile_fits)) in tiles.iter().zip(aligned) {
        for (k, f) in frames.iter().enumerate() {
            for j in 0..plan.window {
                for i in 0..plan.window {
                    let wgt = wx[i] * wx[j] * wt[k];
                    let (x, y, t) = (x0 + i, y0 + j, t0 + k);
                    acc.set(x, y, t, 0, acc.get(x, y, t, 0) + wgt * f.get(i, j));
                    weight.set(x, y, t, 0, weight.get(x, y, t, 0) + wgt);
                }
            }
        }
        fits.extend(tile_fits);
    }
    let data = acc.data().iter().zip(weight.data()).map(|(a, w)| a / w).collect();
    let depth = VideoTensor::from_vec(plan.width, plan.height, plan.frames, 1, data)?;
    Ok(Stitched { depth, fits })
}

/// Cuts the tiles of `plan` out of `video`, in [`TilingPlan::tiles`] order.
pub fn extract_tiles(video: &VideoTensor, plan: &TilingPlan) -> Result<Vec<VideoTensor>> {
    plan.tiles()
        .into_iter()
        .map(|(x, y, t)| video.crop(x, y, t, plan.window, plan.window, plan.t_window))
        .collect()
}

fn check_predictor_output(out: &VideoTensor, side: usize, frames: usize) -> Result<()> {
    if out.dims() != (side, side, frames, 1) {
        return Err(Error::Shape(format!(
            "predictor returned {:?}, expected {side}x{side}x{frames}x1",
            out.dims()
        )));
    }
    Ok(())
}

/// Whole-frame prediction: the video is downsized to the predictor's input
/// size, predicted window by window in time, and upscaled to `out_w x out_h`.
/// Later temporal windows are aligned to the running result on their first frame.
pub fn coarse_layer(video: &VideoTensor, net: &dyn DepthPredictor, out_w: usize, out_h: usize) -> Result<VideoTensor> {
    let (side, oside, tw) = (net.input_side(), net.output_side(), net.frames());
    let small = downsize(video, side, side)?;
    let t = video.frames();
    let ts = origins(t, tw, (tw / 2).max(1));
    let wt = triangle_window(tw);
    let mut acc = VideoTensor::zeros(oside, oside, t, 1);
    let mut weight = vec![0.0; t];
    for &t0 in &ts {
        let est = net.predict(&small.crop(0, 0, t0, side, side, tw)?)?;
        check_predictor_output(&est, oside, tw)?;
        let params = if weight[t0] > 0.0 {
            let reference = acc.frame(t0).map(|v| v / weight[t0]);
            align_to_reference(&est.frame(0), &reference).1
        } else {
            GbrParams::IDENTITY
        };
        for k in 0..tw {
            let f = gbr_apply(&est.frame(k), &params)?;
            for j in 0..oside {
                for i in 0..oside {
                    let v = acc.get(i, j, t0 + k, 0);
                    acc.set(i, j, t0 + k, 0, v + wt[k] * f.get(i, j));
                }
            }
            weight[t0 + k] += wt[k];
        }
    }
    let data = acc
        .data()
        .chunks(oside * oside)
        .zip(&weight)
        .flat_map(|(frame, w)| frame.iter().map(move |v| v / w))
        .collect();
    let coarse = VideoTensor::from_vec(oside, oside, t, 1, data)?;
    if (out_w, out_h) == (oside, oside) {
        Ok(coarse)
    } else {
        resample(&coarse, out_w, out_h, ResampleMode::Bilinear)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    /// Working resolution (input size scaled by the predictor's output/input ratio),
    /// or the input size when upsampling was requested.
    pub depth: VideoTensor,
    pub coarse: VideoTensor,
    pub fits: Vec<TileFit>,
}

/// Predicts every tile and the coarse layer, then stitches. `video` is one grayscale channel.
pub fn reconstruct_video(video: &VideoTensor, net: &dyn DepthPredictor, upsample: bool) -> Result<Reconstruction> {
    if video.channels() != 1 {
        return Err(Error::Shape(format!("reconstruction needs grayscale, got {} channels", video.channels())));
    }
    let (w, h, t, _) = video.dims();
    let (side, oside, tw) = (net.input_side(), net.output_side(), net.frames());
    if oside == 0 || side % oside != 0 {
        return Err(Error::Parameter(format!("predictor maps {side}px to {oside}px")));
    }
    let factor = side / oside;
    let plan = plan_tiling_with(w, h, t, side, side / 2, tw, (tw / 2).max(1))?;
    let work = plan.scaled_down(factor)?;
    let coarse = coarse_layer(video, net, work.width, work.height)?;
    let estimates: Vec<VideoTensor> = plan
        .tiles()
        .par_iter()
        .map(|&(x, y, t0)| {
            let est = net.predict(&video.crop(x, y, t0, side, side, tw)?)?;
            check_predictor_output(&est, oside, tw)?;
            Ok(est)
        })
        .collect::<Result<_>>()?;
    let Stitched { depth, fits } = stitch(&estimates, &coarse, &work)?;
    let depth = if upsample && factor != 1 {
        resample(&depth, w, h, ResampleMode::Bilinear)?
    } else {
        depth
    };
    Ok(Reconstruction { depth, coarse, fits })
}
