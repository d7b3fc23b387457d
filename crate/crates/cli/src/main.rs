use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

mod commands;
mod failure;
mod io;
mod logging;
mod report;

use commands::{
    ComplexityArgs, EvaluateArgs, ExperimentArgs, GenerateArgs, OptimizeArgs, Outcome, PretrainArgs,
};
use failure::{CliResult, Failure};

/// Projection quality, dataset complexity and hyperparameter search for
/// dimensionality reduction.
#[derive(Parser, Debug)]
#[command(name = "drtk", version)]
struct Cli {
    /// Write the run report to this file instead of standard output
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Echo informational messages to standard error
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a projection against its data
    Evaluate(EvaluateArgs),
    /// Pairwise distance shift and mutual neighbor consistency of a dataset
    Complexity(ComplexityArgs),
    /// Search techniques and hyperparameters for the best projection
    Optimize(OptimizeArgs),
    /// Train the predictors used by adaptive optimization
    Pretrain(PretrainArgs),
    /// Run a sensitivity experiment and export its curve
    Experiment(ExperimentArgs),
    /// Write synthetic datasets
    Generate(GenerateArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("DRTK_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::input(format!(
            "DRTK_THREADS must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn run(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Complexity(a) => commands::complexity(a),
        Command::Optimize(a) => commands::optimize(a),
        Command::Pretrain(a) => commands::pretrain_cmd(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Generate(a) => commands::generate(a),
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::iter::once("drtk".to_string())
        .chain(std::env::args().skip(1))
        .collect();
    let cli = Cli::parse();
    logging::init(cli.verbose);
    let start = Instant::now();
    let outcome = configure_threads().and_then(|_| {
        panic::catch_unwind(AssertUnwindSafe(|| run(&cli.command))).unwrap_or_else(|p| {
            Err(Failure::Internal(format!(
                "internal error: {}",
                panic_message(p)
            )))
        })
    });
    let written = outcome.and_then(|o| {
        let text = o.report.render(
            &report::echo_command(&args),
            o.seed,
            start.elapsed(),
            &logging::warnings(),
        );
        match &cli.report {
            Some(path) => io::write_atomic(path, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
