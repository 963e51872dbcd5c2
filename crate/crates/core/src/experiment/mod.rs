//! Experiment configuration, suite execution and reporting.

mod compare;
mod config;
mod report;
mod suite;

pub use compare::{compare, compare_dirs, Comparison, ComparisonRow, SuiteSummary};
pub use config::{load_config, parse_config, ExperimentConfig, CONFIG_VERSION};
pub use report::{
    parse_summary, summarize, write_run, write_summary, Manifest, ManifestRun, Statistic, SuiteStatus, SummaryRow,
    FINAL_HEADER, METRICS_HEADER, SCHEMA_VERSION, SUMMARY_HEADER, TRAJECTORY_HEADER, WEIGHT_NORMS_HEADER,
};
pub use suite::{run_dir_name, run_suite, ExperimentReport, TimedRun};
