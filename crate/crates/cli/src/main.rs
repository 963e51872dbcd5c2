use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fasa_core::experiment::{compare_dirs, load_config, run_suite, ExperimentConfig};
use fasa_core::harness::AugmentMode;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUN: u8 = 2;

#[derive(Parser)]
#[command(name = "fasa", version, about = "Long-tailed feature augmentation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every mode x seed combination of a config and write CSV reports.
    Run {
        config: PathBuf,
        /// Comma-separated seeds, replacing the config's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Comma-separated modes (none, fasa, smote), replacing the config's list.
        #[arg(long, value_delimiter = ',')]
        mode: Option<Vec<String>>,
        /// Output directory, replacing the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of runs executed in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print per-bin accuracy deltas (B - A) between two suite directories.
    Compare { dir_a: PathBuf, dir_b: PathBuf },
    /// Check a config and print it with all defaults filled in.
    Validate { config: PathBuf },
}

fn apply_overrides(
    mut config: ExperimentConfig,
    seeds: Option<Vec<u64>>,
    mode: Option<Vec<String>>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig> {
    if let Some(seeds) = seeds {
        config.seeds = seeds;
    }
    if let Some(modes) = mode {
        config.modes = modes
            .iter()
            .map(|m| m.parse::<AugmentMode>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run {
            config,
            seeds,
            mode,
            out,
            jobs,
        } => {
            let cfg = match load_config(&config)
                .map_err(anyhow::Error::from)
                .and_then(|c| apply_overrides(c, seeds, mode, out))
            {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match run_suite(&cfg, jobs) {
                Ok(report) => {
                    for run in &report.runs {
                        eprintln!(
                            "{}/seed-{}: test acc {:.4} ({:.2?})",
                            run.report.mode.as_str(),
                            run.report.seed,
                            run.report.test.overall_acc,
                            run.wall_clock
                        );
                    }
                    println!("{}", report.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_RUN)
                }
            }
        }
        Command::Compare { dir_a, dir_b } => {
            match compare_dirs(&dir_a, &dir_b)
                .with_context(|| format!("comparing {} and {}", dir_a.display(), dir_b.display()))
            {
                Ok(table) => {
                    print!("{}", table.to_csv());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
    }
}
