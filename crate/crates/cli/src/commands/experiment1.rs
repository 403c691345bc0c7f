use std::path::Path;
use std::time::Instant;

use nrdk_core::losses::{mae_sn, Align};
use nrdk_core::{Error, Result, VideoTensor};
use nrdk_estimator::{split_indices, NetConfig, Sample, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{load_samples, resolve_configs, train_run, write_json};
use crate::args::{Experiment1Args, Kind};
use crate::report::Summary;

pub const ROWS: [&str; 2] = ["per-frame", "first-frame"];
pub const COLUMNS: [Kind; 2] = [Kind::Trsc, Kind::Gbr];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
    pub text: String,
}

impl From<Summary> for Cell {
    fn from(s: Summary) -> Self {
        Self {
            mean: s.mean,
            std: s.std,
            text: s.text(),
        }
    }
}

/// Training outcome of one loss column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRun {
    pub loss: Kind,
    /// Mean training loss of the untrained network.
    pub initial_train_loss: f64,
    /// Mean training loss over the last epoch.
    pub final_train_loss: f64,
    pub best_epoch: usize,
    pub seconds: f64,
}

/// MAE-SN (full GBR alignment) on the held-out clips, rows by alignment and
/// columns by training loss.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub rows: Vec<String>,
    pub columns: Vec<Kind>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<Cell>>,
    /// Constant prediction, per-frame alignment.
    pub baseline: Cell,
    pub test_clips: usize,
    pub oracle: bool,
    pub runs: Vec<LossRun>,
}

impl Table1 {
    pub fn cell(&self, row: Align, column: Kind) -> &Cell {
        let r = if row == Align::PerFrame { 0 } else { 1 };
        let c = COLUMNS.iter().position(|&k| k == column).expect("column");
        &self.cells[r][c]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(["alignment", "trsc", "gbr"]).map_err(csv_err)?;
        for (name, row) in self.rows.iter().zip(&self.cells) {
            w.write_record([name.as_str(), &row[0].text, &row[1].text]).map_err(csv_err)?;
        }
        w.write_record(["constant-plane baseline (per-frame)", &self.baseline.text, &self.baseline.text])
            .map_err(csv_err)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn scores(preds: &[VideoTensor], truths: &[&VideoTensor], align: Align) -> Result<Vec<f64>> {
    preds
        .par_iter()
        .zip(truths.par_iter())
        .map(|(p, t)| Ok(mae_sn(p, t, align, Kind::Gbr.fit_mode())?.mae_sn))
        .collect()
}

/// Trains one network per loss on the seeded 80/10/10 split, keeps the one with
/// the best validation loss and scores it on the test clips. With `oracle` the
/// truth itself is scored and nothing is trained.
pub fn experiment1(
    samples: &[Sample],
    net_cfg: &NetConfig,
    train_cfg: &TrainConfig,
    oracle: bool,
    out: &Path,
) -> Result<Table1> {
    let split = split_indices(samples.len(), train_cfg.seed);
    if split.test.is_empty() {
        return Err(Error::config("data", format!("{} clips leave no test split", samples.len())));
    }
    let truths: Vec<&VideoTensor> = split.test.iter().map(|&i| &samples[i].truth).collect();
    let (w, h, t, _) = truths[0].dims();
    let zeros = vec![VideoTensor::zeros(w, h, t, 1); truths.len()];
    let baseline = Summary::of(&scores(&zeros, &truths, Align::PerFrame)?)?;

    let mut columns = Vec::new();
    let mut runs = Vec::new();
    for kind in COLUMNS {
        let preds: Vec<VideoTensor> = if oracle {
            truths.iter().map(|&v| v.clone()).collect()
        } else {
            let cfg = TrainConfig {
                loss: kind.invariant(),
                ..train_cfg.clone()
            };
            let start = Instant::now();
            let state = train_run(samples, net_cfg, &cfg, &out.join(format!("{kind:?}").to_lowercase()))?;
            runs.push(LossRun {
                loss: kind,
                initial_train_loss: state.history[0].train_loss,
                final_train_loss: state.history.last().expect("history").train_loss,
                best_epoch: state.best_epoch,
                seconds: start.elapsed().as_secs_f64(),
            });
            split
                .test
                .par_iter()
                .map(|&i| state.best.predict_clip(&samples[i].input))
                .collect::<Result<_>>()?
        };
        let per_frame = Summary::of(&scores(&preds, &truths, Align::PerFrame)?)?;
        let first = Summary::of(&scores(&preds, &truths, Align::First)?)?;
        columns.push((per_frame, first));
    }
    let table = Table1 {
        rows: ROWS.iter().map(|s| s.to_string()).collect(),
        columns: COLUMNS.to_vec(),
        cells: vec![
            columns.iter().map(|c| Cell::from(c.0)).collect(),
            columns.iter().map(|c| Cell::from(c.1)).collect(),
        ],
        baseline: baseline.into(),
        test_clips: truths.len(),
        oracle,
        runs,
    };
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_json(&out.join("table.json"), &table)?;
    table.write_csv(&out.join("table.csv"))?;
    Ok(table)
}

pub fn cmd_experiment1(a: &Experiment1Args) -> Result<()> {
    let (net_cfg, cfg) = resolve_configs(&a.knobs, None)?;
    let samples = load_samples(&a.data)?;
    let table = experiment1(&samples, &net_cfg, &cfg, a.oracle, &a.out)?;
    for (name, row) in table.rows.iter().zip(&table.cells) {
        println!("{name:>12}  trsc {}  gbr {}", row[0].text, row[1].text);
    }
    println!("{:>12}  {}", "baseline", table.baseline.text);
    Ok(())
}
