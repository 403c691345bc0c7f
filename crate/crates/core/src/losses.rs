//! Invariant training losses with analytic gradients, and the MAE-SN metric.
//!
//! Both losses are masked mean squared errors between invariant fields of the
//! prediction and of the truth. Per frame, the squared error is summed over
//! the jointly valid pixels and all `K` invariant components and divided by
//! `K * valid_count`; frames without valid pixels are skipped and the rest are
//! averaged. The validity mask is treated as locally constant when
//! differentiating.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::{
    fit_linear, fit_plane, invariant, jet, jet_adjoint, FitMode, InvariantKind, JetGrad, DEFAULT_EPS,
};
use crate::tensor::{Frame, VideoTensor};

#[derive(Clone, Debug, PartialEq)]
pub struct LossValue {
    pub loss: f64,
    /// `d loss / d pred`, same shape as the prediction.
    pub gradient: VideoTensor,
    /// Jointly valid pixels summed over frames.
    pub valid: usize,
}

struct FrameTerm {
    sq_err: f64,
    valid: usize,
    /// Gradient of the frame's raw squared-error sum with respect to the frame.
    grad: Vec<f64>,
}

fn check_pair(pred: &VideoTensor, truth: &VideoTensor) -> Result<()> {
    if !pred.same_shape(truth) {
        return Err(Error::Shape(format!("prediction {:?} vs truth {:?}", pred.dims(), truth.dims())));
    }
    if pred.channels() != 1 {
        return Err(Error::Shape(format!("depth videos have 1 channel, got {}", pred.channels())));
    }
    Ok(())
}

fn frame_term(pred: &Frame, truth: &Frame, kind: InvariantKind, eps: f64) -> Result<FrameTerm> {
    let (w, h) = (pred.width(), pred.height());
    let jp = jet(pred)?;
    let fp = invariant(&jp, eps, kind);
    let ft = invariant(&jet(truth)?, eps, kind);
    let k = kind.channels();
    let mut g = JetGrad::zeros(w * h);
    let mut sq_err = 0.0;
    let mut valid = 0;
    for p in 0..w * h {
        if !(fp.mask[p] && ft.mask[p]) {
            continue;
        }
        valid += 1;
        let (a, b) = (&fp.values[p * k..(p + 1) * k], &ft.values[p * k..(p + 1) * k]);
        // d(sum sq)/d(invariant component)
        let mut gi = [0.0; 6];
        for c in 0..k {
            let d = a[c] - b[c];
            sq_err += d * d;
            gi[c] = 2.0 * d;
        }
        let (zx, zy, zxx, zxy, zyy) = (jp.zx[p], jp.zy[p], jp.zxx[p], jp.zxy[p], jp.zyy[p]);
        let n = (zxx * zxx + 2.0 * zxy * zxy + zyy * zyy).sqrt();
        // invariant = numerator / n; back through the quotient and the norm
        let (gxx, gxy, gyy, s) = match kind {
            InvariantKind::Gbr => (gi[0], gi[1], gi[2], gi[0] * zxx + gi[1] * zxy + gi[2] * zyy),
            InvariantKind::TrSc => {
                g.zx[p] = gi[0] / n;
                g.zy[p] = gi[1] / n;
                let gxy = gi[3] + gi[4];
                (gi[2], gxy, gi[5], gi[0] * zx + gi[1] * zy + gi[2] * zxx + gxy * zxy + gi[5] * zyy)
            }
        };
        let n3 = n * n * n;
        g.zxx[p] = gxx / n - s * zxx / n3;
        g.zxy[p] = gxy / n - s * 2.0 * zxy / n3;
        g.zyy[p] = gyy / n - s * zyy / n3;
    }
    let grad = if valid > 0 { jet_adjoint(w, h, &g) } else { vec![0.0; w * h] };
    Ok(FrameTerm { sq_err, valid, grad })
}

/// Masked MSE between invariant fields of `pred` and `truth`, with gradient.
pub fn invariant_loss(pred: &VideoTensor, truth: &VideoTensor, kind: InvariantKind, eps: f64) -> Result<LossValue> {
    check_pair(pred, truth)?;
    let (w, h, t, _) = pred.dims();
    let terms: Vec<FrameTerm> = (0..t)
        .into_par_iter()
        .map(|k| frame_term(&pred.frame(k), &truth.frame(k), kind, eps))
        .collect::<Result<_>>()?;
    let used = terms.iter().filter(|f| f.valid > 0).count();
    if used == 0 {
        return Err(Error::Degenerate("every pixel of every frame is masked".into()));
    }
    let kc = kind.channels() as f64;
    let mut loss = 0.0;
    let mut gradient = VideoTensor::zeros(w, h, t, 1);
    let mut valid = 0;
    for (k, f) in terms.iter().enumerate() {
        if f.valid == 0 {
            continue;
        }
        let scale = 1.0 / (kc * f.valid as f64 * used as f64);
        loss += f.sq_err * scale;
        valid += f.valid;
        let dst = &mut gradient.data_mut()[k * w * h..(k + 1) * w * h];
        for (d, s) in dst.iter_mut().zip(&f.grad) {
            *d = s * scale;
        }
    }
    if !loss.is_finite() || !gradient.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    Ok(LossValue { loss, gradient, valid })
}

/// MSE between GBR invariants: zero on the whole GBR orbit of the truth.
pub fn loss_gbr(pred: &VideoTensor, truth: &VideoTensor) -> Result<LossValue> {
    invariant_loss(pred, truth, InvariantKind::Gbr, DEFAULT_EPS)
}

/// MSE between stretch/translation invariants: zero on `lambda * truth + tau`.
pub fn loss_trsc(pred: &VideoTensor, truth: &VideoTensor) -> Result<LossValue> {
    invariant_loss(pred, truth, InvariantKind::TrSc, DEFAULT_EPS)
}

/// How predictions are aligned to the truth before scoring.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Align {
    /// Fit each frame separately.
    #[default]
    PerFrame,
    /// Fit the first frame and reuse its parameters for the whole clip.
    First,
    None,
}

/// Alignment applied to one frame, `(alpha, beta, lambda, tau)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub coeffs: [f64; 4],
    /// The prediction carried no usable signal (`lambda` would be negative or
    /// the design was singular), so the best plane of the truth was used.
    pub plane_fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mae_sn: f64,
    pub per_frame: Vec<f64>,
    pub alignment: Vec<Alignment>,
}

/// Least squares with `lambda >= 0`. The objective is a convex quadratic, so
/// when the free optimum has `lambda < 0` (or `pred` adds nothing beyond the
/// plane terms) the constrained optimum is at `lambda = 0`.
pub fn align_frame(pred: &Frame, truth: &Frame, group: FitMode) -> Result<Alignment> {
    match fit_linear(pred, truth, None, group) {
        Ok(f) if f.coeffs[2] >= 0.0 => Ok(Alignment {
            coeffs: f.coeffs,
            plane_fallback: false,
        }),
        Ok(_) | Err(Error::Fit(_)) => {
            let coeffs = match group {
                FitMode::Full => fit_plane(truth, None)?.coeffs,
                FitMode::ScaleShift => [0.0, 0.0, 0.0, truth.mean()],
            };
            Ok(Alignment {
                coeffs,
                plane_fallback: true,
            })
        }
        Err(e) => Err(e),
    }
}

fn apply(pred: &Frame, c: &[f64; 4]) -> Frame {
    Frame::from_fn(pred.width(), pred.height(), |i, j| {
        let (x, y) = pred.world(i, j);
        c[0] * x + c[1] * y + c[2] * pred.get(i, j) + c[3]
    })
}

/// Mean absolute error per frame over the truth frame's (population) standard
/// deviation, averaged over frames, after the requested alignment.
pub fn mae_sn(pred: &VideoTensor, truth: &VideoTensor, align: Align, group: FitMode) -> Result<MetricReport> {
    check_pair(pred, truth)?;
    let t = pred.frames();
    let mut per_frame = Vec::with_capacity(t);
    let mut alignment = Vec::with_capacity(t);
    let mut first: Option<Alignment> = None;
    for k in 0..t {
        let (p, g) = (pred.frame(k), truth.frame(k));
        let sigma = g.std_dev();
        if !(sigma > 0.0) {
            return Err(Error::Metric(format!("truth frame {k} has zero variance")));
        }
        let a = match align {
            Align::None => Alignment {
                coeffs: [0.0, 0.0, 1.0, 0.0],
                plane_fallback: false,
            },
            Align::PerFrame => align_frame(&p, &g, group)?,
            Align::First => first.get_or_insert(align_frame(&p, &g, group)?).clone(),
        };
        let aligned = apply(&p, &a.coeffs);
        let mae = aligned.data().iter().zip(g.data()).map(|(u, v)| (u - v).abs()).sum::<f64>() / g.len() as f64;
        per_frame.push(mae / sigma);
        alignment.push(a);
    }
    let mae_sn = per_frame.iter().sum::<f64>() / t.max(1) as f64;
    if !mae_sn.is_finite() {
        return Err(Error::NonFinite("MAE-SN".into()));
    }
    Ok(MetricReport {
        mae_sn,
        per_frame,
        alignment,
    })
}
