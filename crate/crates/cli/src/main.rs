use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use syzygy_cli::{run_command, Command, Scenario};

/// Numerical experiments on syzygies of the planar three-body problem.
///
/// Exit status: 0 success, 1 error, 2 hypothesis not met, 3 collision stop,
/// 4 theorem violation.
#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    command: Command,

    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,

    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,

    /// Replaces the seeds in the scenario.
    #[arg(long)]
    seed: Option<u64>,

    /// Sweep worker threads; defaults to the available parallelism.
    #[arg(long, env = "SYZYGY_WORKERS")]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || {
        let mut scenario = Scenario::load(&cli.scenario)?;
        if let Some(seed) = cli.seed {
            scenario = scenario.with_seed(seed);
        }
        let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        run_command(cli.command, &scenario, &cli.out, workers)
    };
    match run() {
        Ok(outcome) => ExitCode::from(outcome.status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
