//! Batch workflows behind the `nlwg` binary. Each command writes its resolved
//! configuration to `run_config.json` and timing to `run_meta.json` in its output
//! directory; every other output is a function of the configuration and seed.

pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod plot;

pub use error::CliError;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use config::{load, AnalyzeRun, DatasetRun, FinetuneRun, OptimizeRun, TrainRun};
use nlwg::modes::Polarization;
use output::RunDir;

#[derive(Debug, Parser)]
#[command(name = "nlwg", version, about = "Inverse design of AlGaAs photon-pair waveguide sources")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; defaults apply to omitted keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a surrogate training set with the reference mode solver.
    Dataset {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lambda_nm: Option<f64>,
        #[arg(long, value_parser = parse_polarization)]
        polarization: Option<Polarization>,
    },
    /// Train a surrogate on a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Update a trained surrogate on fresh samples.
    Finetune {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Maximize the overlap figure of merit.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stack: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// Tuning curves, joint spectra, state and rate reports for a stack.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        stack: Option<PathBuf>,
    },
}

fn parse_polarization(s: &str) -> Result<Polarization, String> {
    match s.to_ascii_lowercase().as_str() {
        "te" => Ok(Polarization::TE),
        "tm" => Ok(Polarization::TM),
        _ => Err(format!("expected te or tm, got {s}")),
    }
}

fn start(common: &Common) -> Result<RunDir, CliError> {
    RunDir::create(&common.out)
}

fn config_of<T: serde::de::DeserializeOwned + Default>(common: &Common) -> Result<T, CliError> {
    load(common.config.as_deref().map(Path::new))
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Dataset { common, n, lambda_nm, polarization } => {
            let mut c: DatasetRun = config_of(&common)?;
            c.seed = common.seed.unwrap_or(c.seed);
            c.n = n.unwrap_or(c.n);
            c.lambda_nm = lambda_nm.unwrap_or(c.lambda_nm);
            c.polarization = polarization.unwrap_or(c.polarization);
            if c.n == 0 {
                return Err(CliError::Config("n must be at least 1".into()));
            }
            let out = start(&common)?;
            let s = commands::cmd_dataset(&c, &out)?;
            println!("dataset {} with {} samples ({} train, {} validation)", s.id, s.n, s.train, s.validation);
            out.write_meta("dataset")
        }
        Command::Train { common, dataset, epochs, lr, resume } => {
            let mut c: TrainRun = config_of(&common)?;
            c.seed = common.seed.unwrap_or(c.seed);
            c.dataset = dataset.or(c.dataset);
            c.resume = resume.or(c.resume);
            c.train.epochs = epochs.unwrap_or(c.train.epochs);
            c.train.lr = lr.unwrap_or(c.train.lr);
            let out = start(&common)?;
            let r = commands::cmd_train(&c, &out)?;
            println!("trained {} epochs, best validation mse {:.3e}", r.history.len(), r.best_validation_mse);
            out.write_meta("train")
        }
        Command::Finetune { common, checkpoint, dataset, replay, epochs } => {
            let mut c: FinetuneRun = config_of(&common)?;
            c.seed = common.seed.unwrap_or(c.seed);
            c.checkpoint = checkpoint.or(c.checkpoint);
            c.dataset = dataset.or(c.dataset);
            c.replay = replay.or(c.replay);
            c.epochs = epochs.unwrap_or(c.epochs);
            let out = start(&common)?;
            let r = commands::cmd_finetune(&c, &out)?;
            println!("fine-tuned {} epochs, mse {:.3e} -> {:.3e}", r.epochs, r.mse_before, r.mse_after);
            out.write_meta("finetune")
        }
        Command::Optimize { common, stack, iters, lr } => {
            let mut c: OptimizeRun = config_of(&common)?;
            c.seed = common.seed.unwrap_or(c.seed);
            c.stack = stack.or(c.stack);
            c.optimize.max_iters = iters.unwrap_or(c.optimize.max_iters);
            c.optimize.adam.lr = lr.unwrap_or(c.optimize.adam.lr);
            let out = start(&common)?;
            let s = commands::cmd_optimize(&c, &out)?;
            println!(
                "|Γ| {:.4} -> {:.4} pm/V (x{:.2}) over {} iterations, max discrepancy {:.2}%",
                s.initial_reference_fom_pm_per_v,
                s.best_reference_fom_pm_per_v,
                s.ratio,
                s.iterations,
                100.0 * s.max_rel_discrepancy
            );
            out.write_meta("optimize")
        }
        Command::Analyze { common, stack } => {
            let mut c: AnalyzeRun = config_of(&common)?;
            c.seed = common.seed.unwrap_or(c.seed);
            c.stack = stack.or(c.stack);
            let out = start(&common)?;
            let s = commands::cmd_analyze(&c, &out)?;
            println!(
                "HV {:.3} deg, VH {:.3} deg, concurrence {:.4} (ideal {:.6}), rate {:.3e} Hz",
                s.theta_hv_deg, s.theta_vh_deg, s.polarization.concurrence, s.ideal_concurrence, s.rate_hz
            );
            out.write_meta("analyze")
        }
    }
}
