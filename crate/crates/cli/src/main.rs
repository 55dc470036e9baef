mod commands;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use instance_delta::decay::ViewMode;

use crate::report::Format;

#[derive(Parser, Debug)]
#[command(name = "instance-delta", version, about = "Instance-level comparison of model sizes from per-seed predictions")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for tables, plots and report.json. Nothing is written without it.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Format of emitted tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker thread cap.
    #[arg(long, global = true, env = "INSTANCE_DELTA_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    /// Every finetuning run is its own seed.
    Naive,
    /// One majority-vote ensemble per pretraining seed.
    Ensemble,
}

impl From<Mode> for ViewMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Naive => ViewMode::NaiveFlatten,
            Mode::Ensemble => ViewMode::RigorousEnsemble,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Loss {
    ZeroOne,
    Squared,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Checkpoints {
    All,
    Last,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ComponentArg {
    Pretvar,
    Finevar,
}

#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    /// Tensor file: long-format CSV or JSON manifest.
    pub input: PathBuf,
    #[arg(long)]
    pub s1: String,
    #[arg(long)]
    pub s2: String,
    #[arg(long, value_enum, default_value_t = Mode::Ensemble)]
    pub mode: Mode,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a long-format CSV and write it as a JSON manifest.
    Ingest {
        input: PathBuf,
    },
    /// Decay curve and lower bound on the decaying fraction.
    Decay {
        #[command(flatten)]
        pair: PairArgs,
        /// Baseline splits: 1 is the canonical split, more are seeded random splits.
        #[arg(long, default_value_t = 1)]
        splits: usize,
        /// Also write an SVG of the two CDFs.
        #[arg(long)]
        plot: bool,
        /// List the instances whose difference is at most this threshold.
        #[arg(long, allow_hyphen_values = true)]
        export: Option<f64>,
    },
    /// Fisher exact tests per instance and the adaptive BH bound.
    Significance {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Loss split into squared bias and seed variance components.
    Variance {
        input: PathBuf,
        /// Sizes to decompose; all sizes by default.
        #[arg(long)]
        size: Vec<String>,
        #[arg(long, value_enum, default_value_t = Loss::ZeroOne)]
        loss: Loss,
        #[arg(long, value_enum, default_value_t = Checkpoints::All)]
        checkpoints: Checkpoints,
        /// Show negative aggregate components as zero. Per-instance tables stay raw.
        #[arg(long)]
        clamp_negative: bool,
    },
    /// Correlation of consecutive gains within accuracy buckets.
    Momentum {
        input: PathBuf,
        #[arg(long)]
        s1: String,
        #[arg(long)]
        s2: String,
        #[arg(long)]
        s3: String,
        #[arg(long, value_enum, default_value_t = Mode::Ensemble)]
        mode: Mode,
    },
    /// A variance component regressed on squared bias.
    Condvar {
        input: PathBuf,
        #[arg(long)]
        size: String,
        #[arg(long, value_enum, default_value_t = ComponentArg::Pretvar)]
        component: ComponentArg,
        #[arg(long, value_enum, default_value_t = Loss::ZeroOne)]
        loss: Loss,
        /// Evaluation points on [0, 1].
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value_t = 500)]
        max_points: usize,
        /// Fix the noise variance instead of searching over it.
        #[arg(long)]
        pinned_noise: Option<f64>,
    },
    /// Bootstrap estimate of the bias from choosing the threshold adaptively.
    Bootstrap {
        input: PathBuf,
        #[arg(long)]
        s1: String,
        #[arg(long)]
        s2: String,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
    },
    /// Draw a tensor from a generative config, with its analytic truth.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the Monte Carlo certification suite.
    Verify {
        /// Reduced trial counts.
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not set thread count: {e}");
        }
    }
    match commands::run(cli.command, &cli.common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
