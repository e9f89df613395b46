//! `gmse`: weight maps, loss and SSIM evaluation, synthetic data, training
//! and loss comparisons from the command line.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 I/O failure, 4 pipeline error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Pipeline(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Pipeline(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Pipeline(m) => m,
        }
    }
}

impl From<gmse_core::Error> for CliError {
    fn from(e: gmse_core::Error) -> Self {
        match e {
            gmse_core::Error::Io { .. } | gmse_core::Error::Format { .. } => CliError::Io(e.to_string()),
            other => CliError::Pipeline(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "gmse", version, about = "Gradient-weighted MSE losses for field-valued data")]
struct Cli {
    /// Worker threads; results are identical for any value.
    #[arg(long, global = true, env = "GMSE_THREADS", default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct WeightArgs {
    #[arg(long, default_value_t = 10.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.2)]
    pub offset: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Build the gradient weight map of a field.
    Weightmap {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        params: WeightArgs,
        /// Output map, written as f32bin.
        #[arg(long)]
        out: PathBuf,
        /// Optional greyscale rendering.
        #[arg(long)]
        pgm: Option<PathBuf>,
    },
    /// Print the MSE or GMSE between two fields.
    Loss {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        fake: PathBuf,
        #[arg(long, conflicts_with = "gmse")]
        mse: bool,
        #[arg(long)]
        gmse: bool,
        #[command(flatten)]
        params: WeightArgs,
        /// Manifest path (default: gmse-loss.manifest.json in the working directory).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Print the SSIM between two fields.
    Ssim {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Dynamic range.
        #[arg(long = "L", default_value_t = 1.0)]
        dynamic_range: f64,
        #[arg(long, default_value_t = 0.01)]
        k1: f64,
        #[arg(long, default_value_t = 0.03)]
        k2: f64,
        /// Mean SSIM over 11x11 windows instead of one global window.
        #[arg(long)]
        windowed: bool,
        /// Manifest path (default: gmse-ssim.manifest.json in the working directory).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Generate a synthetic wake dataset.
    Synth {
        #[arg(long)]
        n: usize,
        /// Field shape as HxW.
        #[arg(long, default_value = "64x64")]
        size: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the generator on a dataset with one loss.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// mse, gmse or dgmse.
        #[arg(long)]
        loss: String,
        /// Stage file for dgmse: lines of `start sigma gamma offset`.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[command(flatten)]
        params: WeightArgs,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train several losses on the same data and tabulate them.
    Compare {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated runs: mse, gmse, dgmse, gmse:SIGMA:GAMMA:OFFSET, dgmse:FILE.
        #[arg(long)]
        runs: String,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let threads = cli.threads;
    match cli.command {
        Command::Weightmap { input, params, out, pgm } => commands::weightmap(&input, params, &out, pgm.as_deref()),
        Command::Loss {
            real,
            fake,
            mse,
            gmse,
            params,
            manifest,
        } => commands::loss(&real, &fake, gmse && !mse, params, manifest),
        Command::Ssim {
            a,
            b,
            dynamic_range,
            k1,
            k2,
            windowed,
            manifest,
        } => commands::ssim(&a, &b, dynamic_range, k1, k2, windowed, manifest),
        Command::Synth { n, size, seed, out } => commands::synth(n, &size, seed, &out, threads),
        Command::Train {
            data,
            loss,
            schedule,
            params,
            epochs,
            seed,
            lr,
            batch_size,
            out,
        } => commands::train(commands::TrainArgs {
            data,
            loss,
            schedule,
            params,
            epochs,
            seed,
            lr,
            batch_size,
            out,
            threads,
        }),
        Command::Compare {
            data,
            runs,
            epochs,
            seed,
            lr,
            out,
        } => commands::compare(&data, &runs, epochs, seed, lr, &out, threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
