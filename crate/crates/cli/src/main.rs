mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "lwr", version, about = "Godunov data, physics-informed Fourier operators and error-growth evaluation for LWR traffic flow")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON run configuration; missing fields take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (1 gives bit-exact reruns).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of encoded samples and Godunov targets.
    GenData,
    /// Run the Godunov solver on an initial (and boundary) condition.
    Solve(commands::SolveArgs),
    /// Train an operator on a dataset.
    Train(commands::TrainArgs),
    /// Predict the solution field for one encoded input.
    Predict(commands::PredictArgs),
    /// Per-sample and per-class error reports plus heatmaps.
    Eval(commands::EvalArgs),
    /// Fit error-growth curves to an evaluation report.
    FitCurves(commands::FitArgs),
    /// Time operator inference against the solver.
    Bench(commands::BenchArgs),
    /// Train one model per λ and tabulate validation error.
    LambdaSweep(commands::SweepArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numeric = err
        .chain()
        .filter_map(|e| e.downcast_ref::<lwr_core::Error>())
        .any(|e| e.is_numeric());
    if numeric {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp_secs()
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
