use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ubm_core::bounds::KlMode;
use ubm_core::{BoostPolicy, Border};

use crate::pgm::Palette;

/// Uncertainty-boosted pseudo labels: boosting, voting, evaluation, simulation and bounds.
#[derive(Debug, Parser)]
#[command(name = "ubm", version, about, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boost the argmax pseudo label of a probability map.
    Boost(BoostArgs),
    /// Write the per-pixel confidence plane of a probability map.
    Conf(ConfArgs),
    /// Write regional vote fractions of a label map or probability map.
    Vote(VoteArgs),
    /// Per-class IoU and mIoU of a prediction against ground truth.
    Eval(EvalArgs),
    /// Train the toy cross-pseudo-supervision simulator and print mIoU rows.
    Simulate(SimulateArgs),
    /// PAC-Bayes gap and risk bounds.
    Bounds(BoundsArgs),
    /// Export a label map as a binary PGM image.
    ExportPgm(ExportPgmArgs),
}

/// Square (`5`) or rectangular (`5x7`, height × width) vicinity; both sides odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSize {
    pub height: usize,
    pub width: usize,
}

pub fn parse_window(s: &str) -> Result<WindowSize, String> {
    let side = |t: &str| -> Result<usize, String> {
        let n: usize = t
            .trim()
            .parse()
            .map_err(|_| format!("bad vicinity size {t:?}"))?;
        if n == 0 || n.is_multiple_of(2) {
            return Err(format!("vicinity size {n} must be odd and positive"));
        }
        Ok(n)
    };
    match s.split_once(['x', 'X']) {
        Some((h, w)) => Ok(WindowSize {
            height: side(h)?,
            width: side(w)?,
        }),
        None => {
            let n = side(s)?;
            Ok(WindowSize {
                height: n,
                width: n,
            })
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct WindowArgs {
    /// Vicinity size, `N` or `HxW`.
    #[arg(long, default_value = "5", value_parser = parse_window)]
    pub vicinity: WindowSize,
    /// Border handling: `clip` divides by the in-bounds area, `zero` by the full window.
    #[arg(long, default_value = "clip")]
    pub border: Border,
}

#[derive(Debug, Args)]
pub struct BoostArgs {
    /// Probability map (3-d f32 TEN1).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Output TEN1 file.
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value = "ruv")]
    pub policy: BoostPolicy,
    /// Write the argmax of the boosted label as a u16 label map.
    #[arg(long)]
    pub harden: bool,
    /// Write the report CSV here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Confidence plane output (2-d f32 TEN1).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Also write the normalized blend weights (2-d f32 TEN1).
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VoteArgs {
    /// Label map (2-d u16) or probability map (3-d f32).
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Class count for label maps; defaults to the largest label plus one.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Use the summed-area table instead of the direct window scan.
    #[arg(long)]
    pub fast: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth label map (2-d u16).
    #[arg(long)]
    pub truth: PathBuf,
    /// Predicted label map, or a probability map reduced by argmax.
    #[arg(long)]
    pub pred: PathBuf,
    /// Class count; defaults to the largest label in either file plus one.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Booster policies, comma separated.
    #[arg(
        long = "policy",
        visible_alias = "policies",
        value_delimiter = ',',
        default_value = "ruv"
    )]
    pub policies: Vec<BoostPolicy>,
    /// Vicinity sizes for `ruv`, comma separated.
    #[arg(
        long = "vicinity",
        visible_alias = "vicinities",
        value_delimiter = ',',
        default_value = "5",
        value_parser = parse_window
    )]
    pub vicinities: Vec<WindowSize>,
    #[arg(long, default_value = "clip")]
    pub border: Border,
    /// Dataset seeds, comma separated.
    #[arg(
        long = "seed",
        visible_alias = "seeds",
        value_delimiter = ',',
        default_value = "0,1,2,3,4"
    )]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 1.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.4)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// Leading iterations without the cross-supervision term.
    #[arg(long, default_value_t = 100)]
    pub warmup: usize,
    #[arg(long, default_value_t = 2)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 50)]
    pub eval_interval: usize,
    #[arg(long, default_value_t = 8)]
    pub validation_images: usize,
    /// Re-harden boosted pseudo labels before the loss.
    #[arg(long)]
    pub harden: bool,
    #[arg(long, default_value_t = 20)]
    pub images: usize,
    /// Image side length.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.1)]
    pub labeled_fraction: f64,
    #[arg(long, default_value_t = 0.35)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub palette_seed: u64,
    /// Emit a row for every evaluation instead of only the final one.
    #[arg(long)]
    pub history: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// KL divergence between posterior and prior, given directly.
    #[arg(long, conflicts_with_all = ["mu_p", "mu_q", "instance"])]
    pub kl: Option<f64>,
    /// Prior mean, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "mu_q"
    )]
    pub mu_p: Option<Vec<f64>>,
    /// Posterior mean, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "mu_p"
    )]
    pub mu_q: Option<Vec<f64>>,
    /// JSON file with a vanilla/boosted bound instance.
    #[arg(long, conflicts_with_all = ["mu_p", "mu_q"])]
    pub instance: Option<PathBuf>,
    /// Number of samples.
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Empirical risk; adds the full risk bound to the output.
    #[arg(long)]
    pub risk: Option<f64>,
    #[arg(long, default_value = "paper")]
    pub mode: KlMode,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportPgmArgs {
    /// Label map (2-d u16) or probability map (3-d f32).
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value = "spread")]
    pub palette: Palette,
    /// Class count; defaults to the largest label plus one.
    #[arg(long)]
    pub classes: Option<usize>,
}
