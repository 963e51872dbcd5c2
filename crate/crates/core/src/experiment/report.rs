//! CSV and manifest files written for every run and suite.
//!
//! All CSV files start with a header row; their column sets are versioned
//! together by [`SCHEMA_VERSION`], which is recorded in `manifest.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FasaError, Result};
use crate::harness::{AugmentMode, EpochMetrics, RunReport};

pub const SCHEMA_VERSION: u32 = 1;

pub const METRICS_HEADER: [&str; 6] = [
    "epoch",
    "overall_acc",
    "tail_acc",
    "mid_acc",
    "head_acc",
    "mean_val_loss",
];
pub const TRAJECTORY_HEADER: [&str; 5] = ["epoch", "class_id", "group_id", "p_c", "group_signal"];
pub const WEIGHT_NORMS_HEADER: [&str; 3] = ["epoch", "class_id", "norm"];
pub const FINAL_HEADER: [&str; 6] = ["split", "overall_acc", "tail_acc", "mid_acc", "head_acc", "mean_loss"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "mode",
    "statistic",
    "seed",
    "overall_acc",
    "tail_acc",
    "mid_acc",
    "head_acc",
];

fn fmt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl IntoIterator<Item = [String; N]>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| FasaError::io(path, e))
}

fn metric_row(first: String, m: &EpochMetrics) -> [String; 6] {
    [
        first,
        m.overall_acc.to_string(),
        fmt(m.bin_acc[0]),
        fmt(m.bin_acc[1]),
        fmt(m.bin_acc[2]),
        fmt(m.mean_val_loss),
    ]
}

/// Writes `metrics.csv`, `weight_norms.csv`, `final.csv` and, for modes
/// with sampling probabilities, `trajectory.csv` into `dir`.
pub fn write_run(dir: &Path, report: &RunReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| FasaError::io(dir, e))?;
    write_csv(
        &dir.join("metrics.csv"),
        METRICS_HEADER,
        report.epochs.iter().map(|m| metric_row(m.epoch.to_string(), m)),
    )?;
    write_csv(
        &dir.join("weight_norms.csv"),
        WEIGHT_NORMS_HEADER,
        report.epochs.iter().flat_map(|m| {
            m.weight_norms
                .iter()
                .enumerate()
                .map(move |(c, n)| [m.epoch.to_string(), c.to_string(), n.to_string()])
        }),
    )?;
    write_csv(
        &dir.join("final.csv"),
        FINAL_HEADER,
        [metric_row("test".into(), &report.test)],
    )?;
    if report.mode != AugmentMode::None {
        write_csv(
            &dir.join("trajectory.csv"),
            TRAJECTORY_HEADER,
            report.trajectory.iter().map(|r| {
                [
                    r.epoch.to_string(),
                    r.class_id.to_string(),
                    r.group_id.to_string(),
                    r.prob.to_string(),
                    fmt(r.group_signal),
                ]
            }),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Final,
    Median,
    Q1,
    Q3,
    Iqr,
    Mean,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Final => "final",
            Statistic::Median => "median",
            Statistic::Q1 => "q1",
            Statistic::Q3 => "q3",
            Statistic::Iqr => "iqr",
            Statistic::Mean => "mean",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "final" => Statistic::Final,
            "median" => Statistic::Median,
            "q1" => Statistic::Q1,
            "q3" => Statistic::Q3,
            "iqr" => Statistic::Iqr,
            "mean" => Statistic::Mean,
            _ => return None,
        })
    }
}

/// One row of `summary.csv`. `values` holds overall, tail, mid and head
/// accuracy; `seed` is set only on per-seed `final` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub mode: AugmentMode,
    pub statistic: Statistic,
    pub seed: Option<u64>,
    pub values: [Option<f64>; 4],
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Per-seed final rows followed by median, quartiles, IQR and mean for each
/// mode. Reports are grouped by mode in the order given.
pub fn summarize(reports: &[RunReport]) -> Vec<SummaryRow> {
    let mut modes: Vec<AugmentMode> = Vec::new();
    for r in reports {
        if !modes.contains(&r.mode) {
            modes.push(r.mode);
        }
    }
    let mut rows = Vec::new();
    for mode in modes {
        let runs: Vec<&RunReport> = reports.iter().filter(|r| r.mode == mode).collect();
        let per_seed: Vec<[Option<f64>; 4]> = runs
            .iter()
            .map(|r| {
                let t = &r.test;
                [Some(t.overall_acc), t.bin_acc[0], t.bin_acc[1], t.bin_acc[2]]
            })
            .collect();
        for (r, values) in runs.iter().zip(&per_seed) {
            rows.push(SummaryRow {
                mode,
                statistic: Statistic::Final,
                seed: Some(r.seed),
                values: *values,
            });
        }
        let column = |k: usize| -> Vec<f64> {
            let mut v: Vec<f64> = per_seed.iter().filter_map(|row| row[k]).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let stat = |f: &dyn Fn(&[f64]) -> f64| -> [Option<f64>; 4] {
            std::array::from_fn(|k| {
                let v = column(k);
                (!v.is_empty()).then(|| f(&v))
            })
        };
        for (s, values) in [
            (Statistic::Median, stat(&|v| quantile(v, 0.5))),
            (Statistic::Q1, stat(&|v| quantile(v, 0.25))),
            (Statistic::Q3, stat(&|v| quantile(v, 0.75))),
            (Statistic::Iqr, stat(&|v| quantile(v, 0.75) - quantile(v, 0.25))),
            (Statistic::Mean, stat(&|v| v.iter().sum::<f64>() / v.len() as f64)),
        ] {
            rows.push(SummaryRow {
                mode,
                statistic: s,
                seed: None,
                values,
            });
        }
    }
    rows
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(
        path,
        SUMMARY_HEADER,
        rows.iter().map(|r| {
            [
                r.mode.as_str().to_string(),
                r.statistic.as_str().to_string(),
                r.seed.map(|s| s.to_string()).unwrap_or_default(),
                fmt(r.values[0]),
                fmt(r.values[1]),
                fmt(r.values[2]),
                fmt(r.values[3]),
            ]
        }),
    )
}

/// Parses `summary.csv` text, checking the header and every field.
pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>> {
    let malformed = |reason: String| FasaError::Malformed {
        what: "summary.csv",
        reason,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(malformed(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let at = |reason: String| malformed(format!("row {}: {reason}", line + 1));
        if record.len() != SUMMARY_HEADER.len() {
            return Err(at(format!("expected {} fields", SUMMARY_HEADER.len())));
        }
        let mode: AugmentMode = record[0].parse().map_err(|e: FasaError| at(e.to_string()))?;
        let statistic =
            Statistic::parse(&record[1]).ok_or_else(|| at(format!("unknown statistic `{}`", &record[1])))?;
        let seed = match &record[2] {
            "" => None,
            s => Some(s.parse::<u64>().map_err(|e| at(format!("seed: {e}")))?),
        };
        if (statistic == Statistic::Final) != seed.is_some() {
            return Err(at("seed must be present exactly on final rows".into()));
        }
        let mut values = [None; 4];
        for (k, v) in values.iter_mut().enumerate() {
            let field = &record[3 + k];
            if !field.is_empty() {
                let x: f64 = field
                    .parse()
                    .map_err(|e| at(format!("{}: {e}", SUMMARY_HEADER[3 + k])))?;
                if !x.is_finite() {
                    return Err(at(format!("{} is not finite", SUMMARY_HEADER[3 + k])));
                }
                *v = Some(x);
            }
        }
        rows.push(SummaryRow {
            mode,
            statistic,
            seed,
            values,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub mode: AugmentMode,
    pub seed: u64,
    pub dir: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Complete,
    Failed,
}

/// `manifest.json`: what a suite directory contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub status: SuiteStatus,
    pub group_thresholds: [usize; 2],
    pub completed: Vec<ManifestRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest is always serializable");
        std::fs::write(path, text + "\n").map_err(|e| FasaError::io(path, e))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| FasaError::Malformed {
            what: "manifest.json",
            reason: e.to_string(),
        })?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(FasaError::Malformed {
                what: "manifest.json",
                reason: format!("unsupported schema version {}", m.schema_version),
            });
        }
        Ok(m)
    }
}
