//! Running every (mode, seed) combination of a config.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{FasaError, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::report::{
    summarize, write_run, write_summary, Manifest, ManifestRun, SuiteStatus, SCHEMA_VERSION,
};
use crate::harness::{run_training, AugmentMode, RunReport};

#[derive(Debug, Clone)]
pub struct TimedRun {
    pub report: RunReport,
    pub wall_clock: Duration,
}

/// In-memory result of a suite. Wall-clock times are kept here rather than
/// in the output files so that reruns stay byte-identical.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub output_dir: PathBuf,
    pub runs: Vec<TimedRun>,
}

pub fn run_dir_name(mode: AugmentMode, seed: u64) -> String {
    format!("{}/seed-{seed}", mode.as_str())
}

fn execute(config: &ExperimentConfig, out: &Path, mode: AugmentMode, seed: u64) -> Result<TimedRun> {
    let start = Instant::now();
    let report = run_training(&config.run_config(mode, seed))?;
    write_run(&out.join(run_dir_name(mode, seed)), &report)?;
    Ok(TimedRun {
        report,
        wall_clock: start.elapsed(),
    })
}

/// Runs the suite into `config.output_dir` using up to `jobs` workers.
///
/// Writes one directory per run plus `config.toml`, `summary.csv` and
/// `manifest.json`. If any run fails the manifest is written with status
/// `failed`, listing the runs that did complete, and the first error is
/// returned.
pub fn run_suite(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let out = config.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| FasaError::io(&out, e))?;
    let config_path = out.join("config.toml");
    std::fs::write(&config_path, config.to_toml()).map_err(|e| FasaError::io(&config_path, e))?;

    let combos: Vec<(AugmentMode, u64)> = config
        .modes
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| FasaError::invalid("jobs", e.to_string()))?;
    let results: Vec<Result<TimedRun>> = pool.install(|| {
        combos
            .par_iter()
            .map(|&(mode, seed)| execute(config, &out, mode, seed))
            .collect()
    });

    let mut runs = Vec::new();
    let mut first_error = None;
    for ((mode, seed), result) in combos.iter().zip(results) {
        match result {
            Ok(run) => runs.push(run),
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(FasaError::RunFailed {
                        mode: mode.as_str().to_string(),
                        seed: *seed,
                        reason: e.to_string(),
                    });
                }
            }
        }
    }
    let completed = runs
        .iter()
        .map(|r| ManifestRun {
            mode: r.report.mode,
            seed: r.report.seed,
            dir: run_dir_name(r.report.mode, r.report.seed),
        })
        .collect();
    let mut manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        status: SuiteStatus::Complete,
        group_thresholds: config.data.group_thresholds,
        completed,
        error: None,
    };
    if let Some(err) = first_error {
        manifest.status = SuiteStatus::Failed;
        manifest.error = Some(err.to_string());
        manifest.write(&out.join("manifest.json"))?;
        return Err(err);
    }
    let reports: Vec<RunReport> = runs.iter().map(|r| r.report.clone()).collect();
    write_summary(&out.join("summary.csv"), &summarize(&reports))?;
    manifest.write(&out.join("manifest.json"))?;
    Ok(ExperimentReport {
        config: config.clone(),
        output_dir: out,
        runs,
    })
}
