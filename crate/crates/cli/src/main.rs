use clap::{Parser, Subcommand};
use oclbench_cli::commands;
use oclbench_cli::config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

/// Streaming continual-learning benchmark harness.
#[derive(Parser)]
#[command(name = "oclbench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config file (flat key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base ordering seed (overrides the config's `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of class orderings (overrides the config's `orderings`).
    #[arg(long, global = true)]
    orderings: Option<usize>,
    /// Worker threads; falls back to OCLBENCH_THREADS, then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write CSV + markdown reports.
    Run,
    /// Run the train × test augmentation grid with Avg-OD and RARG columns.
    Grid,
    /// Compare metrics.csv files from previous runs.
    Compare {
        /// metrics.csv files (at least two).
        files: Vec<PathBuf>,
    },
    /// Report pooling overhead: R=3 vs R=1 (avg) timing on wall clock.
    Bench,
    /// Export the configured dataset as OCLT records plus a manifest.
    Gen,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, oclbench_cli::config::ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::from_text("")?,
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(orderings) = cli.orderings {
        cfg.orderings = orderings;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("OCLBENCH_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("warning: thread pool already initialized, --threads ignored");
        }
    }

    let needs_config = !matches!(cli.command, Command::Compare { .. });
    let cfg = if needs_config {
        match load_config(&cli) {
            Ok(c) => Some(c),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    } else {
        None
    };

    let result = match &cli.command {
        Command::Run => commands::cmd_run(cfg.as_ref().unwrap()),
        Command::Grid => commands::cmd_grid(cfg.as_ref().unwrap()),
        Command::Compare { files } => {
            if files.len() < 2 {
                eprintln!("error: compare needs at least two metrics files");
                return ExitCode::from(2);
            }
            commands::cmd_compare(files, cli.out.as_deref()).map(|md| println!("{md}"))
        }
        Command::Bench => commands::cmd_bench(cfg.as_ref().unwrap()).map(|md| println!("{md}")),
        Command::Gen => commands::cmd_gen(cfg.as_ref().unwrap()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
