use std::path::Path;

use nrdk_core::losses::{mae_sn, Align};
use nrdk_core::resample::{resample, ResampleMode};
use nrdk_core::{Error, Result, VideoTensor};
use serde::{Deserialize, Serialize};

use crate::args::Kind;

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Metric("no scores to summarize".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: var.sqrt(),
            count: values.len(),
        })
    }

    /// `"mean ± std"` with four decimals.
    pub fn text(&self) -> String {
        format!("{:.4} ± {:.4}", self.mean, self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipScore {
    pub index: usize,
    pub mae_sn: f64,
    pub per_frame: Vec<f64>,
}

/// Output of `evaluate`, also used by `experiment2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub align: Align,
    pub group: Kind,
    pub mae_sn: Summary,
    pub clips: Vec<ClipScore>,
    /// The same score for a constant (all-zero) prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
}

impl EvalReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Brings `truth` to the size of `pred` by repeated 2x average pooling.
pub fn match_truth(pred: &VideoTensor, truth: &VideoTensor) -> Result<VideoTensor> {
    let mut t = truth.clone();
    while t.width() > pred.width() && t.width() == 2 * (t.width() / 2) && t.height() == 2 * (t.height() / 2) {
        t = resample(&t, t.width() / 2, t.height() / 2, ResampleMode::AveragePool2x)?;
    }
    if !t.same_shape(pred) {
        return Err(Error::Shape(format!(
            "prediction {:?} does not match truth {:?}",
            pred.dims(),
            truth.dims()
        )));
    }
    Ok(t)
}

/// Scores each prediction against the truth of the same index.
pub fn evaluate_pairs(preds: &[VideoTensor], truths: &[VideoTensor], align: Align, group: Kind) -> Result<EvalReport> {
    if preds.len() != truths.len() {
        return Err(Error::Shape(format!("{} predictions for {} truths", preds.len(), truths.len())));
    }
    let mut clips = Vec::with_capacity(preds.len());
    let mut baseline = Vec::with_capacity(preds.len());
    for (index, (p, t)) in preds.iter().zip(truths).enumerate() {
        let t = match_truth(p, t)?;
        let r = mae_sn(p, &t, align, group.fit_mode())?;
        clips.push(ClipScore {
            index,
            mae_sn: r.mae_sn,
            per_frame: r.per_frame,
        });
        let (w, h, n, _) = p.dims();
        baseline.push(mae_sn(&VideoTensor::zeros(w, h, n, 1), &t, align, group.fit_mode())?.mae_sn);
    }
    let scores: Vec<f64> = clips.iter().map(|c| c.mae_sn).collect();
    Ok(EvalReport {
        align,
        group,
        mae_sn: Summary::of(&scores)?,
        clips,
        baseline: Some(Summary::of(&baseline)?),
        source: None,
    })
}
