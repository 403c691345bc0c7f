mod experiment1;
mod experiment2;

use std::path::Path;

use nrdk_core::config::GeneratorConfig;
use nrdk_core::dataset::{generate_dataset, Dataset};
use nrdk_core::render::{ClipSample, TextureSource};
use nrdk_core::stitcher::reconstruct_video;
use nrdk_core::{Error, Result};
use nrdk_estimator::checkpoint;
use nrdk_estimator::net::{CLIP_FRAMES, INPUT_SIDE};
use nrdk_estimator::train::TrainOutput;
use nrdk_estimator::{split_indices, train, NetConfig, Network, Sample, TrainConfig, TrainState};
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;
use crate::field;
use crate::io::{self, PreviewMeta};
use crate::report::evaluate_pairs;

pub use experiment1::{experiment1, Cell, LossRun, Table1};
pub use experiment2::{experiment2, ood_generator};

pub fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => cmd_generate(a),
        Command::Invariants(a) => cmd_invariants(a),
        Command::Train(a) => cmd_train(a).map(|_| ()),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Experiment1(a) => experiment1::cmd_experiment1(a),
        Command::Experiment2(a) => experiment2::cmd_experiment2(a),
        Command::Preview(a) => cmd_preview(a),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => GeneratorConfig::load(p)?,
        None => GeneratorConfig::default(),
    };
    let (textures, label) = match &a.textures {
        Some(dir) => (TextureSource::from_dir(dir)?, dir.display().to_string()),
        None => (TextureSource::Procedural, "procedural".to_string()),
    };
    let m = generate_dataset(&cfg, &textures, &label, a.seed, a.count, &a.out)?;
    log::info!("wrote {} clips to {}", m.count, a.out.display());
    Ok(())
}

pub fn cmd_invariants(a: &InvariantsArgs) -> Result<()> {
    let kind = a.kind.invariant();
    let fields = io::load_depths(&a.input)?
        .par_iter()
        .map(|d| field::field_video(d, kind, a.eps))
        .collect::<Result<Vec<_>>>()?;
    field::save(&a.out, kind, &fields)
}

/// Training samples from a dataset of 64x64x16 clips.
pub fn load_samples(data: &Path) -> Result<Vec<Sample>> {
    let ds = Dataset::load(data)?;
    ds.clips.iter().map(sample_from_clip).collect()
}

pub fn sample_from_clip(c: &ClipSample) -> Result<Sample> {
    let (w, h, t, _) = c.render.dims();
    if (w, h, t) != (INPUT_SIDE, INPUT_SIDE, CLIP_FRAMES) || !c.depth.dims().eq(&(w, h, t, 1)) {
        return Err(Error::Shape(format!(
            "training clips must be {INPUT_SIDE}x{INPUT_SIDE}x{CLIP_FRAMES}, got render {:?} depth {:?}",
            c.render.dims(),
            c.depth.dims()
        )));
    }
    Sample::from_clip(c)
}

/// Network and training configs: defaults, then the config files, then flags.
pub fn resolve_configs(knobs: &TrainKnobs, loss: Option<Kind>) -> Result<(NetConfig, TrainConfig)> {
    let net = match &knobs.config {
        Some(p) => NetConfig::load(p)?,
        None if knobs.tiny => NetConfig::tiny(),
        None => NetConfig::default(),
    };
    let mut cfg = match &knobs.train_config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<TrainConfig>(&text).map_err(|e| Error::config("train", e.to_string()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(e) = knobs.epochs {
        cfg.epochs = e;
    }
    if let Some(s) = knobs.seed {
        cfg.seed = s;
    }
    if let Some(b) = knobs.batch_size {
        cfg.batch_size = b;
    }
    if let Some(lr) = knobs.lr {
        cfg.optimizer.lr = lr;
    }
    if let Some(k) = loss {
        cfg.loss = k.invariant();
    }
    cfg.validate()?;
    Ok((net, cfg))
}

/// Trains on the seeded 80/10/10 split of `samples` and writes `split.json`,
/// `run.json`, the log and the checkpoints into `out`.
pub fn train_run(samples: &[Sample], net_cfg: &NetConfig, cfg: &TrainConfig, out: &Path) -> Result<TrainState> {
    let split = split_indices(samples.len(), cfg.seed);
    let output = TrainOutput::new(out)?;
    write_json(&out.join("split.json"), &split)?;
    write_json(&out.join("run.json"), &json!({ "net": net_cfg, "train": cfg, "clips": samples.len() }))?;
    let net = Network::init(net_cfg, cfg.seed)?;
    train(net, samples, &split, cfg, Some(&output))
}

pub fn cmd_train(a: &TrainArgs) -> Result<TrainState> {
    let (net_cfg, cfg) = resolve_configs(&a.knobs, a.loss)?;
    let samples = load_samples(&a.data)?;
    let state = train_run(&samples, &net_cfg, &cfg, &a.out)?;
    log::info!("best epoch {} (validation loss {:?})", state.best_epoch, state.best_val);
    Ok(state)
}

pub fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    let net = checkpoint::load(&a.ckpt)?;
    let inputs = io::load_input_videos(&a.input)?;
    let mut clips = Vec::with_capacity(inputs.len());
    let mut fallbacks = 0usize;
    for (i, v) in inputs.into_iter().enumerate() {
        let rec = reconstruct_video(&v.video, &net, a.upsample)?;
        fallbacks += rec
            .fits
            .iter()
            .filter(|f| f.mode != nrdk_core::stitcher::TileFitMode::Full)
            .count();
        log::info!("clip {i}: {:?} -> {:?}", v.video.dims(), rec.depth.dims());
        clips.push(io::depth_clip(v.video, rec.depth, v.digest)?);
    }
    if fallbacks > 0 {
        log::info!("{fallbacks} tile-frame fits fell back to scale-shift or identity");
    }
    let source = json!({
        "command": "reconstruct",
        "input": a.input.display().to_string(),
        "checkpoint": a.ckpt.display().to_string(),
        "upsample": a.upsample,
    });
    io::write_clips(&a.out, &clips, source)?;
    if let Some(dir) = &a.png_preview {
        let mut meta = PreviewMeta::new();
        for (i, c) in clips.iter().enumerate() {
            io::write_depth_previews(dir, i, &c.depth, &mut meta)?;
        }
        meta.save(dir)?;
    }
    Ok(())
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let preds = io::load_depths(&a.pred)?;
    let truths = io::load_depths(&a.truth)?;
    let mut report = evaluate_pairs(&preds, &truths, a.align.into(), a.group)?;
    report.source = Some(json!({
        "pred": a.pred.display().to_string(),
        "truth": a.truth.display().to_string(),
    }));
    match &a.json {
        Some(p) => report.save(p),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

pub fn cmd_preview(a: &PreviewArgs) -> Result<()> {
    let ds = Dataset::load(&a.input)?;
    if let Some(i) = a.clip.filter(|&i| i >= ds.len()) {
        return Err(Error::config("clip", format!("index {i} outside {} clips", ds.len())));
    }
    let mut meta = PreviewMeta::new();
    for (i, c) in ds.clips.iter().enumerate() {
        if a.clip.is_some_and(|k| k != i) {
            continue;
        }
        if a.what != PreviewWhat::Render {
            io::write_depth_previews(&a.out, i, &c.depth, &mut meta)?;
        }
        if a.what != PreviewWhat::Depth {
            io::write_render_previews(&a.out, i, &c.render, &mut meta)?;
        }
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    meta.save(&a.out)
}
