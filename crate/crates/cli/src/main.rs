//! `talab`: user-equilibrium assignment, dataset generation, surrogate
//! training, and the audits tying them together.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cli::commands::{eval, gen_data, gradcheck, plot, solve, train, verify};
use cli::config_file::FlatConfig;
use cli::output::out_root;

#[derive(Parser)]
#[command(
    name = "talab",
    version,
    about = "Traffic assignment lab: equilibrium solving, dataset generation, and surrogate training",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    /// Configuration file (flat key=value lines under [section] headers).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one config value, e.g. --set train.epochs=50. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,

    /// Output root; defaults to $TALAB_OUT, then ./talab-out.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Cap worker threads; defaults to the machine core count.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one user-equilibrium assignment from TNTP files.
    Solve {
        /// TNTP network file.
        #[arg(long)]
        net: Option<String>,
        /// TNTP trips file.
        #[arg(long)]
        trips: Option<String>,
        /// Convergence threshold on the relative objective change.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Generate a labeled dataset of perturbed equilibrium problems.
    #[command(name = "gen-data")]
    GenData,
    /// Train a surrogate model on a generated dataset.
    Train {
        /// Dataset file written by gen-data.
        #[arg(long)]
        data: Option<String>,
        /// Pretrained checkpoint (transfer strategy only).
        #[arg(long)]
        ckpt: Option<String>,
    },
    /// Score a trained checkpoint on a dataset split.
    Eval {
        /// Dataset file written by gen-data.
        #[arg(long)]
        data: Option<String>,
        /// Checkpoint written by train.
        #[arg(long)]
        ckpt: Option<String>,
        /// Split to score: train, test, or all.
        #[arg(long)]
        split: Option<String>,
    },
    /// Audit reverse-mode gradients against finite differences.
    Gradcheck,
    /// Audit every sample of a dataset against the equilibrium conditions.
    Verify {
        /// Dataset file written by gen-data.
        #[arg(long)]
        data: Option<String>,
    },
    /// Render a true-versus-predicted scatter plot from a predictions file.
    Plot {
        /// Predictions file written by eval.
        #[arg(long)]
        pred: Option<String>,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => FlatConfig::from_path(path)?,
        None => FlatConfig::empty(),
    };
    for spec in &cli.set {
        config.apply_override(spec)?;
    }

    let threads = match cli.threads {
        Some(n) => Some(n),
        None => config.parse::<usize>("run", "threads")?,
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("capping the worker thread count")?;
    }

    let root = out_root(cli.out_dir.clone());
    match &cli.command {
        Command::Solve { net, trips, threshold } => solve::run(
            &config,
            &root,
            &solve::SolveArgs {
                net: net.clone(),
                trips: trips.clone(),
                threshold: *threshold,
            },
        ),
        Command::GenData => gen_data::run(&config, &root),
        Command::Train { data, ckpt } => train::run(
            &config,
            &root,
            &train::TrainArgs {
                data: data.clone(),
                ckpt: ckpt.clone(),
            },
        ),
        Command::Eval { data, ckpt, split } => eval::run(
            &config,
            &root,
            &eval::EvalArgs {
                data: data.clone(),
                ckpt: ckpt.clone(),
                split: split.clone(),
            },
        ),
        Command::Gradcheck => gradcheck::run(&config, &root),
        Command::Verify { data } => {
            verify::run(&config, &root, &verify::VerifyArgs { data: data.clone() })
        }
        Command::Plot { pred } => {
            plot::run(&config, &root, &plot::PlotArgs { pred: pred.clone() })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Usage problems exit 2, --help and --version exit 0.
        Err(err) => err.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
