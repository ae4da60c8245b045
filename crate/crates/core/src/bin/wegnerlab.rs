use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wegnerlab::runner::{self, Experiment, EXIT_CONFIG, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "wegnerlab", version, about = "Density-of-states experiments for lattice Anderson models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Concurrent workers
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output directory (overrides `output.dir`)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Disorder-averaged integrated density of states
    Ids(Common),
    /// Density of states by centered differences, with bound checks
    Dos(Common),
    /// Free-Laplacian IDS in infinite volume (and on a cell of side `model.ell`)
    FreeIds(Common),
    /// Lower-bound certificate for the density of states
    BoundCert(Common),
    /// Rescaled level spacings and a Poisson test
    Spacing(Common),
    /// Property suites of every module
    Verify(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Ids(c) => (Experiment::Ids, c),
        Command::Dos(c) => (Experiment::Dos, c),
        Command::FreeIds(c) => (Experiment::FreeIds, c),
        Command::BoundCert(c) => (Experiment::BoundCert, c),
        Command::Spacing(c) => (Experiment::Spacing, c),
        Command::Verify(c) => (Experiment::Verify, c),
    };
    let workers = common.workers.unwrap_or_else(runner::default_workers);
    if workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    match runner::run_path(experiment, common.config.as_deref(), common.out.as_deref(), workers) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code(experiment) as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
