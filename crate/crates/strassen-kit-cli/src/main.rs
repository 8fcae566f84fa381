use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use strassen_kit_cli::config::{Config, Experiment};
use strassen_kit_cli::error::CliError;
use strassen_kit_cli::runner;

/// Additive-process experiments: simulation, growth-condition checks,
/// rate-function duality, rare-event estimation, and the functional law of
/// the iterated logarithm.
#[derive(Parser)]
#[command(name = "strassen-kit", version, about)]
struct Cli {
    /// Experiment to run: simulate | conditions | rate | duality | mdp | strassen | lil
    experiment: String,

    /// Path to the TOML config file
    #[arg(long)]
    config: PathBuf,

    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,

    /// Override the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> strassen_kit_cli::Result<()> {
    if let Ok(threads) = std::env::var("STRASSEN_KIT_THREADS") {
        let n: usize = threads.parse().map_err(|_| {
            CliError::Validation(format!("STRASSEN_KIT_THREADS must be a number, got {threads:?}"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool setup failed: {e}")))?;
    }

    let experiment: Experiment = cli.experiment.parse()?;
    let text = std::fs::read_to_string(&cli.config)?;
    let mut config = Config::parse(&text)?;
    config.resolve_experiment(Some(experiment))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.display().to_string();
    }

    let manifest = runner::run(&config)?;
    for artifact in &manifest.artifacts {
        println!("{}/{}  sha256={}", config.output_dir, artifact.name, artifact.sha256);
    }
    println!(
        "{} finished in {:.2}s (seed {})",
        cli.experiment, manifest.wall_clock_seconds, manifest.seed
    );
    Ok(())
}
