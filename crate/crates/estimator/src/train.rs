use std::io::Write;
use std::path::{Path, PathBuf};

use nrdk_core::invariants::InvariantKind;
use nrdk_core::losses::invariant_loss;
use nrdk_core::render::ClipSample;
use nrdk_core::resample::{resample, ResampleMode};
use nrdk_core::{Error, Result, SeededRng, VideoTensor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::config::TrainConfig;
use crate::net::Network;
use crate::optim::Adam;
use crate::volume::Volume;

const SPLIT_STREAM: u64 = 0x5711;
const SHUFFLE_STREAM: u64 = 0x5487;

pub const LOG_FILE: &str = "train_log.jsonl";
pub const BEST_CHECKPOINT: &str = "best.nrck";
pub const LAST_CHECKPOINT: &str = "last.nrck";

/// Network input and the depth target on the output grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: VideoTensor,
    pub truth: VideoTensor,
}

impl Sample {
    /// Grayscale render as input, depth average-pooled 2x as target.
    pub fn from_clip(clip: &ClipSample) -> Result<Self> {
        let depth = &clip.depth;
        let truth = resample(depth, depth.width() / 2, depth.height() / 2, ResampleMode::AveragePool2x)?;
        Ok(Self {
            input: clip.grayscale(),
            truth,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle cut into `floor(0.8 n)` / `floor(0.1 n)` / the rest.
pub fn split_indices(n: usize, seed: u64) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).child(SPLIT_STREAM).shuffle(&mut idx);
    let (a, b) = (n * 8 / 10, n / 10);
    Split {
        train: idx[..a].to_vec(),
        val: idx[a..a + b].to_vec(),
        test: idx[a + b..].to_vec(),
    }
}

/// Loss and parameter gradient for one sample; `None` when every pixel is masked.
pub fn sample_gradient(net: &Network, s: &Sample, kind: InvariantKind, eps: f64) -> Result<Option<(f64, Vec<f64>)>> {
    let (out, cache) = net.forward_cached(&Volume::from_video(&s.input)?)?;
    let pred = out.into_video()?;
    match invariant_loss(&pred, &s.truth, kind, eps) {
        Ok(l) => {
            let dout = Volume::from_video(&l.gradient)?;
            Ok(Some((l.loss, net.backward(&cache, &dout)?)))
        }
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn sample_loss(net: &Network, s: &Sample, kind: InvariantKind, eps: f64) -> Result<Option<f64>> {
    let pred = net.forward(&Volume::from_video(&s.input)?)?.into_video()?;
    match invariant_loss(&pred, &s.truth, kind, eps) {
        Ok(l) => Ok(Some(l.loss)),
        Err(Error::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Mean loss over the samples that have any valid pixel; `None` if there are none.
pub fn mean_loss(net: &Network, samples: &[&Sample], kind: InvariantKind, eps: f64) -> Result<Option<f64>> {
    let losses: Vec<Option<f64>> = samples
        .par_iter()
        .map(|s| sample_loss(net, s, kind, eps))
        .collect::<Result<_>>()?;
    let used: Vec<f64> = losses.into_iter().flatten().collect();
    Ok((!used.is_empty()).then(|| used.iter().sum::<f64>() / used.len() as f64))
}

/// One line of the training log. Epoch 0 is the untrained network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub step: u64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    /// Training samples skipped this epoch because every pixel was masked.
    pub skipped: usize,
}

#[derive(Clone, Debug)]
pub struct TrainState {
    pub net: Network,
    pub optimizer: Adam,
    pub seed: u64,
    pub history: Vec<EpochRecord>,
    pub best: Network,
    pub best_epoch: usize,
    pub best_val: Option<f64>,
}

/// Where training writes its log and checkpoints.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub dir: PathBuf,
}

impl TrainOutput {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn append(&self, rec: &EpochRecord) -> Result<()> {
        let path = self.dir.join(LOG_FILE);
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        writeln!(f, "{}", serde_json::to_string(rec)?).map_err(|e| Error::io(&path, e))
    }
}

/// Adam on mini-batches of `split.train`; the network with the lowest
/// validation loss is kept as `best` (the final one when there is no
/// validation data). Batch gradients are reduced in sample order, so the result
/// does not depend on the thread count.
pub fn train(
    mut net: Network,
    data: &[Sample],
    split: &Split,
    cfg: &TrainConfig,
    out: Option<&TrainOutput>,
) -> Result<TrainState> {
    cfg.validate()?;
    if split.train.is_empty() {
        return Err(Error::config("data", "training split is empty"));
    }
    if let Some(&i) = split.train.iter().chain(&split.val).find(|&&i| i >= data.len()) {
        return Err(Error::Parameter(format!("split index {i} outside {} samples", data.len())));
    }
    if let Some(o) = out {
        let log = o.dir.join(LOG_FILE);
        if log.exists() {
            std::fs::remove_file(&log).map_err(|e| Error::io(&log, e))?;
        }
    }
    let train_set: Vec<&Sample> = split.train.iter().map(|&i| &data[i]).collect();
    let val_set: Vec<&Sample> = split.val.iter().map(|&i| &data[i]).collect();
    let (kind, eps) = (cfg.loss, cfg.eps);
    let val_loss = |net: &Network| -> Result<Option<f64>> {
        if val_set.is_empty() {
            Ok(None)
        } else {
            mean_loss(net, &val_set, kind, eps)
        }
    };

    let mut optimizer = Adam::new(cfg.optimizer, net.param_count());
    let init_train = mean_loss(&net, &train_set, kind, eps)?
        .ok_or_else(|| Error::Degenerate("every training sample is fully masked".into()))?;
    let init_val = val_loss(&net)?;
    let mut history = vec![EpochRecord {
        epoch: 0,
        step: 0,
        train_loss: init_train,
        val_loss: init_val,
        skipped: 0,
    }];
    log::info!("epoch 0: train {init_train:.6} val {init_val:?}");
    if let Some(o) = out {
        o.append(&history[0])?;
    }
    let mut best = net.clone();
    let (mut best_epoch, mut best_val) = (0, init_val);

    for epoch in 1..=cfg.epochs {
        let mut order = split.train.clone();
        SeededRng::new(cfg.seed).child(SHUFFLE_STREAM).child(epoch as u64).shuffle(&mut order);
        let (mut loss_sum, mut used, mut skipped) = (0.0, 0usize, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<Option<(f64, Vec<f64>)>> = batch
                .par_iter()
                .map(|&i| sample_gradient(&net, &data[i], kind, eps))
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; net.param_count()];
            let mut n = 0usize;
            for (l, g) in results.into_iter().flatten() {
                loss_sum += l;
                n += 1;
                grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            skipped += batch.len() - n;
            if n == 0 {
                continue;
            }
            used += n;
            let scale = 1.0 / n as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            optimizer.update(&mut net.params, &grad);
            if let Some(k) = net.params.iter().position(|p| !p.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "training diverged at step {}: parameter {k} is not finite",
                    optimizer.step
                )));
            }
        }
        if used == 0 {
            return Err(Error::Degenerate(format!("epoch {epoch}: every training sample is fully masked")));
        }
        let train_loss = loss_sum / used as f64;
        if !train_loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        let val = val_loss(&net)?;
        let rec = EpochRecord {
            epoch,
            step: optimizer.step,
            train_loss,
            val_loss: val,
            skipped,
        };
        log::info!("epoch {epoch}: train {train_loss:.6} val {val:?}");
        if let Some(o) = out {
            o.append(&rec)?;
        }
        history.push(rec);
        let improved = match (val, best_val) {
            (Some(v), Some(b)) => v < b,
            (Some(_), None) => true,
            (None, _) => true,
        };
        if improved {
            best = net.clone();
            best_epoch = epoch;
            best_val = val;
            if let Some(o) = out {
                checkpoint::save(&best, &o.dir.join(BEST_CHECKPOINT))?;
            }
        }
    }
    if let Some(o) = out {
        if best_epoch == 0 {
            checkpoint::save(&best, &o.dir.join(BEST_CHECKPOINT))?;
        }
        checkpoint::save(&net, &o.dir.join(LAST_CHECKPOINT))?;
    }
    Ok(TrainState {
        net,
        optimizer,
        seed: cfg.seed,
        history,
        best,
        best_epoch,
        best_val,
    })
}
