use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nrdk_core::invariants::{FitMode, InvariantKind};
use nrdk_core::losses::Align;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "nrdk", version, about = "Synthetic deforming-surface clips, GBR-invariant depth learning and stitching")]
pub struct Cli {
    /// Worker threads for all internal parallelism. `--threads 1` is bitwise reproducible.
    #[arg(long, global = true, env = "NRDK_THREADS")]
    pub threads: Option<usize>,

    /// More log output (-v info, -vv debug). `RUST_LOG` also applies.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render a dataset of clips into `<out>/clips.nrsd` plus manifest.
    Generate(GenerateArgs),
    /// Write the invariant fields of every depth frame of a container.
    Invariants(InvariantsArgs),
    /// Train the depth estimator on a generated dataset.
    Train(TrainArgs),
    /// Reconstruct depth videos of arbitrary size by patch stitching.
    Reconstruct(ReconstructArgs),
    /// Score predicted depth videos against ground truth with MAE-SN.
    Evaluate(EvaluateArgs),
    /// Train with both losses and tabulate MAE-SN under both alignments.
    Experiment1(Experiment1Args),
    /// Reconstruct out-of-distribution full-size scenes and score them.
    Experiment2(Experiment2Args),
    /// Export PNG frames of a container.
    Preview(PreviewArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Generator config (JSON). Missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory of texture images.
    #[arg(long, conflicts_with = "procedural")]
    pub textures: Option<PathBuf>,
    /// Procedural textures (the default).
    #[arg(long)]
    pub procedural: bool,
}

#[derive(Args, Debug)]
pub struct InvariantsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::Gbr)]
    pub kind: Kind,
    #[arg(long)]
    pub out: PathBuf,
    /// Degeneracy threshold relative to the frame-median Hessian norm.
    #[arg(long, default_value_t = nrdk_core::invariants::DEFAULT_EPS)]
    pub eps: f64,
}

/// Training knobs shared by `train` and `experiment1`. Flags override the config files.
#[derive(Args, Debug, Clone, Default)]
pub struct TrainKnobs {
    /// Network config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training config (JSON: epochs, batch_size, loss, seed, optimizer, eps).
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Two-stage network of widths 2 and 4 instead of the default architecture.
    #[arg(long, conflicts_with = "config")]
    pub tiny: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory or container.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub loss: Option<Kind>,
    #[command(flatten)]
    pub knobs: TrainKnobs,
    /// Output directory for checkpoints and the training log.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Container of clips, or a directory of frame images (sorted by name).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Upscale the working-resolution depth to the input size.
    #[arg(long)]
    pub upsample: bool,
    /// Also write per-frame normalized depth PNGs here.
    #[arg(long)]
    pub png_preview: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value_t = AlignArg::PerFrame)]
    pub align: AlignArg,
    /// Alignment group: full GBR or scale and shift only.
    #[arg(long, value_enum, default_value_t = Kind::Gbr)]
    pub group: Kind,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct Experiment1Args {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub knobs: TrainKnobs,
    /// Score the ground truth itself instead of trained networks.
    #[arg(long)]
    pub oracle: bool,
    /// Output directory for `table.json`, `table.csv` and per-loss training runs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Experiment2Args {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Scene generator config; defaults to the built-in out-of-distribution settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Kind::Gbr)]
    pub group: Kind,
    /// Report path (evaluate schema).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PreviewArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Only this clip index.
    #[arg(long)]
    pub clip: Option<usize>,
    #[arg(long, value_enum, default_value_t = PreviewWhat::Both)]
    pub what: PreviewWhat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Gbr,
    Trsc,
}

impl Kind {
    pub fn invariant(self) -> InvariantKind {
        match self {
            Kind::Gbr => InvariantKind::Gbr,
            Kind::Trsc => InvariantKind::TrSc,
        }
    }

    pub fn fit_mode(self) -> FitMode {
        match self {
            Kind::Gbr => FitMode::Full,
            Kind::Trsc => FitMode::ScaleShift,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlignArg {
    PerFrame,
    First,
    None,
}

impl From<AlignArg> for Align {
    fn from(a: AlignArg) -> Self {
        match a {
            AlignArg::PerFrame => Align::PerFrame,
            AlignArg::First => Align::First,
            AlignArg::None => Align::None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PreviewWhat {
    Depth,
    Render,
    Both,
}
