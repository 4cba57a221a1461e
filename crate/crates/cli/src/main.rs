use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rwrefine_core::{PipelineConfig, Validate};

mod data;
mod eval;
mod experiment;
mod fixture;
mod refine;

/// Refines coarse segmentation estimates into full-resolution label maps.
#[derive(Debug, Parser)]
#[command(name = "rwrefine", version)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Refine one image from a low-resolution class estimate.
    Refine(refine::RefineArgs),
    /// Score predicted label maps against ground truth.
    Eval(eval::EvalArgs),
    /// Run a robustness or limitation study over a dataset directory.
    Experiment(experiment::ExperimentArgs),
    /// Write a synthetic scene in the dataset directory layout.
    Fixture(fixture::FixtureArgs),
}

/// Pipeline hyperparameters shared by several commands.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Minimum top-two probability margin for a potential seed.
    #[arg(long, default_value_t = 0.03)]
    t: f64,
    /// Thinning iterations.
    #[arg(long, default_value_t = 35)]
    n_thin: usize,
    /// Pruning iterations.
    #[arg(long, default_value_t = 20)]
    n_prun: usize,
    /// Edge-weight sharpness.
    #[arg(long, default_value_t = 11.3)]
    beta: f64,
    /// Relative residual at which the solver stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
}

impl ConfigArgs {
    pub fn to_config(&self) -> anyhow::Result<PipelineConfig> {
        let cfg = PipelineConfig {
            t: self.t,
            n_thin: self.n_thin,
            n_prun: self.n_prun,
            beta: self.beta,
            solver_tol: self.tol,
            solver_max_iter: self.max_iter,
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }
}

/// Bad command-line usage that clap cannot detect on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<rwrefine_core::Error>() {
            return if e.is_io() { 3 } else { 4 };
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return 3;
        }
    }
    4
}

pub fn display(path: &std::path::Path) -> String {
    path.display().to_string()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(usage("--jobs must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    match cli.command {
        Command::Refine(a) => refine::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Experiment(a) => experiment::run(&a),
        Command::Fixture(a) => fixture::run(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
