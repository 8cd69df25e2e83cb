//! `robustfeat`: experiment harness for robust feature augmentation.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "robustfeat", version, about = "Binarizers, color group features and PGD/BPDA experiments")]
struct Cli {
    /// TOML experiment file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `output_dir` from the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Overrides `data.mnist_dir` from the config.
    #[arg(long, global = true)]
    mnist_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the configured model kind; writes model.json and trace.csv.
    Train,
    /// Adversarial accuracy of a trained model; writes attack.csv.
    Attack {
        /// Network checkpoint (default: <output_dir>/model.json).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Adversarial accuracy over the configured ε grid; writes sweep.csv.
    SweepEps {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Dominant sign color of PPM images.
    ExtractColor { paths: Vec<PathBuf> },
    /// Channel-shift robustness of the color extractor.
    Verify {
        #[arg(long)]
        epsilon: f64,
        paths: Vec<PathBuf>,
    },
    /// Nearest-neighbor exactness harness and adversarial region areas.
    Theorem1,
    /// Fraction of pixels near 0 and near 1.
    Stats {
        #[arg(long, default_value = "train")]
        split: String,
        #[arg(long, default_value_t = 0.1)]
        low: f64,
        #[arg(long, default_value_t = 0.9)]
        high: f64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(robustfeat::Error),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use robustfeat::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(..) => 2,
            CliError::Core(e) => match e {
                E::Domain(_) => 1,
                E::Divergence { .. } | E::TrainingFailed { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<robustfeat::Error> for CliError {
    fn from(e: robustfeat::Error) -> Self {
        CliError::Core(e)
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(p.clone(), e))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(d) = &cli.mnist_dir {
        cfg.data.mnist_dir = d.clone();
    }
    cfg.resolve()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    let ctx = commands::Context::create(cfg)?;
    match cli.command {
        Command::Train => ctx.train(),
        Command::Attack { checkpoint } => ctx.attack(checkpoint),
        Command::SweepEps { checkpoint } => ctx.sweep(checkpoint),
        Command::ExtractColor { paths } => ctx.extract_color(&paths),
        Command::Verify { epsilon, paths } => ctx.verify(epsilon, &paths),
        Command::Theorem1 => ctx.theorem1(),
        Command::Stats { split, low, high } => ctx.stats(&split, low, high),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("robustfeat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
