//! `attnlab`: train the single-layer attention model, check its gradients,
//! evaluate the convergence-theory constants, and run the residual
//! experiments — all driven by JSON spec files and a single seed.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod spec;

use commands::{CliError, GradCheckOpts};

#[derive(Parser)]
#[command(
    name = "attnlab",
    version,
    about = "Training-dynamics laboratory for a single-layer softmax-attention network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SpecArgs {
    /// Path to the JSON experiment spec.
    #[arg(long)]
    spec: PathBuf,
    /// Override the spec's seed; all randomness flows from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
    /// Print extra progress detail.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct GradCheckArgs {
    /// Maximum relative error; defaults to 1e-5 (relu) or 1e-6 (smoothed).
    #[arg(long)]
    tol: Option<f64>,
    /// Activation under test: relu or smoothed.
    #[arg(long, default_value = "relu")]
    activation: String,
    /// Number of randomized configurations.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Campaign seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the per-trial report under this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    force: bool,
    /// Print per-trial worst errors.
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run gradient descent and write the loss trace.
    Train(SpecArgs),
    /// Compare analytic gradients against central finite differences.
    GradCheck(GradCheckArgs),
    /// Evaluate alpha, the learning-rate constants and the initialisation
    /// requirement at the spec's initialisation.
    Theory(SpecArgs),
    /// Train one model per residual coefficient and summarise rates.
    SweepBeta(SpecArgs),
    /// Probe attention spectra over a logit-scale sweep and train at the
    /// uniform-attention limit with and without the residual path.
    RankCollapse(SpecArgs),
    /// Paired beta=1 / beta=0 runs from a shared initialisation.
    Ablation(SpecArgs),
    /// Window a CSV file into a dataset and serialise it.
    Ingest(SpecArgs),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(a) => commands::cmd_train(&load(a)?),
        Command::Theory(a) => commands::cmd_theory(&load(a)?),
        Command::SweepBeta(a) => commands::cmd_sweep_beta(&load(a)?),
        Command::RankCollapse(a) => commands::cmd_rank_collapse(&load(a)?),
        Command::Ablation(a) => commands::cmd_ablation(&load(a)?),
        Command::Ingest(a) => commands::cmd_ingest(&load(a)?),
        Command::GradCheck(a) => commands::cmd_grad_check(&GradCheckOpts {
            tol: a.tol,
            activation: a.activation,
            trials: a.trials,
            seed: a.seed,
            out: a.out,
            force: a.force,
            verbose: a.verbose,
        }),
    }
}

fn load(a: SpecArgs) -> Result<commands::SpecRun, CliError> {
    commands::load_run(&a.spec, a.seed, a.out, a.force, a.verbose)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
