use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use roamsim::commands::{self, EvaluateArgs, GenerateArgs, PredictArgs, TrainArgs};
use roamsim::{configure_threads, CliResult, RunConfig};

/// Navigation dataset simulator and action-conditioned frame predictor.
///
/// Exit status: 0 success, 1 validation or run-time failure, 2 usage error.
/// ROAMSIM_THREADS caps worker threads (0 or unset = all cores).
#[derive(Parser)]
#[command(name = "roamsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate sequences in fresh worlds (seeded seed+i) and write a dataset
    Generate {
        /// Run configuration file [default: built-in defaults]
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base world seed [default: seed.world from the config, 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Number of sequences
        #[arg(long, default_value_t = 25)]
        sequences: usize,
        /// Frames per sequence
        #[arg(long, default_value_t = 360)]
        frames: usize,
        /// Dataset root directory
        #[arg(long)]
        out: PathBuf,
        /// Overwrite existing sequence directories [default: off]
        #[arg(long)]
        force: bool,
    },
    /// Check a dataset's layout, synchronization and actuation limits
    Validate {
        /// Dataset root directory
        dir: PathBuf,
    },
    /// Train the predictor on the train split of a dataset
    Train {
        /// Dataset root directory
        #[arg(long)]
        data: PathBuf,
        /// Run configuration file [default: built-in defaults]
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoint path; the loss log and split record are written next to it
        #[arg(long)]
        out: PathBuf,
        /// Replace action channels with the constant 0.5 [default: off, or the resumed checkpoint's mode]
        #[arg(long, value_enum)]
        ablation: Option<OnOff>,
        /// Continue from a checkpoint's parameters, optimizer and sampler state [default: none]
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Total iterations, overriding train.iterations [default: from the config, 2000]
        #[arg(long)]
        iterations: Option<u64>,
        /// Loss log path [default: <out> with extension .loss.csv]
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Roll out predictions for dataset clips and write frames plus per-clip metrics
    Predict {
        /// Trained checkpoint
        #[arg(long)]
        ckpt: PathBuf,
        /// Dataset root directory
        #[arg(long)]
        data: PathBuf,
        /// Run configuration file (context, clip length and gap) [default: built-in defaults]
        #[arg(long)]
        config: Option<PathBuf>,
        /// `all`, a sequence name, or SEQ:START
        #[arg(long, default_value = "all")]
        clip: String,
        /// Frames to predict after the context
        #[arg(long, default_value_t = 20)]
        horizon: usize,
        /// Output directory (pred/, gt/, metrics/, montage/)
        #[arg(long)]
        out: PathBuf,
        /// Also write a ground-truth-over-prediction strip per clip [default: off]
        #[arg(long)]
        montage: bool,
    },
    /// Score predicted clips against ground truth, per horizon step
    Evaluate {
        /// Directory of predicted clips (one subdirectory per clip, or frames directly)
        #[arg(long)]
        pred: PathBuf,
        /// Directory of ground-truth clips with the same layout
        #[arg(long)]
        gt: PathBuf,
        /// Output CSV; a text summary goes next to it as .report.txt
        #[arg(long)]
        report: PathBuf,
    },
    /// Print every configuration key with its default value
    Config,
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Generate { config, seed, sequences, frames, out, force } => {
            let summaries = commands::generate(&GenerateArgs { config, seed, sequences, frames, out, force })?;
            print!("{}", commands::render_safety(&summaries));
        }
        Command::Validate { dir } => print!("{}", commands::validate(&dir)?),
        Command::Train { data, config, out, ablation, resume, iterations, loss_csv } => {
            let ablation = ablation.map(|a| matches!(a, OnOff::On));
            print!("{}", commands::train(&TrainArgs { data, config, out, ablation, resume, iterations, loss_csv })?);
        }
        Command::Predict { ckpt, data, config, clip, horizon, out, montage } => {
            print!("{}", commands::predict(&PredictArgs { ckpt, data, config, clip, horizon, out, montage })?);
        }
        Command::Evaluate { pred, gt, report } => print!("{}", commands::evaluate(&EvaluateArgs { pred, gt, report })?),
        Command::Config => print!("{}", RunConfig::default().render()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
