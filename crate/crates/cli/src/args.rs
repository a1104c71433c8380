use clap::{Args, Parser, Subcommand};
use imtl_core::a2c::{DEFAULT_DISCOUNT, DEFAULT_EPISODES, DEFAULT_LR, DEFAULT_SEEDS};
use std::path::PathBuf;

/// Environment variable naming the directory under which default output
/// directories are created.
pub const OUT_ROOT_ENV: &str = "IMTL_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "imtl", version, about = "Influence-map multi-agent training and transfer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train independent runs from scratch on one scenario.
    Train(TrainArgs),
    /// Train runs that start from a saved policy.
    Transfer(TransferArgs),
    /// Chain transfers through several scenarios.
    Curriculum(CurriculumArgs),
    /// Summarise reward CSVs into a Min/Max/Avg/Std table and plot data.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Episodes per run.
    #[arg(long, default_value_t = DEFAULT_EPISODES)]
    pub episodes: usize,
    /// Independent runs per scenario.
    #[arg(long, default_value_t = DEFAULT_SEEDS)]
    pub seeds: usize,
    /// Side of the local influence map.
    #[arg(long, default_value_t = 37, value_parser = parse_resolution)]
    pub resolution: usize,
    /// Base rng seed; run k uses base + k.
    #[arg(long, default_value_t = 0)]
    pub rng: u64,
    #[arg(long, default_value_t = DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_DISCOUNT)]
    pub discount: f64,
    /// Floor of the exploration rate.
    #[arg(long, default_value_t = 0.0001)]
    pub eps_min: f64,
    /// Environment steps over which exploration decays to its floor.
    #[arg(long, default_value_t = 30_000)]
    pub gamma_steps: u64,
    /// Environment steps treated as already spent on the exploration
    /// schedule. 0 restarts exploration in every run.
    #[arg(long, default_value_t = 0)]
    pub eps_offset: u64,
    /// Hidden layer widths shared by actor and critic.
    #[arg(long, value_delimiter = ',', default_value = "256,128")]
    pub hidden: Vec<usize>,
    /// Output directory. Defaults to a name derived from the command under
    /// $IMTL_OUT_DIR (or ./runs).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Built-in scenario name (3m, 8m, 25m, 2s3z) or descriptor path.
    #[arg(long)]
    pub scenario: String,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub scenario: String,
    /// Checkpoint every run starts from.
    #[arg(long)]
    pub seed_checkpoint: PathBuf,
    /// Scratch rewards CSV of the same scenario to compare against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CurriculumArgs {
    /// Scenario names or descriptor paths, in training order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub stages: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Reward CSVs, each optionally labelled `SCENARIO[@PRETRAINED]=PATH`.
    /// Unlabelled files are reported as scratch runs named after the file.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_resolution(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v @ (19 | 37 | 55)) => Ok(v),
        _ => Err(format!("expected 19, 37 or 55, got {s}")),
    }
}
