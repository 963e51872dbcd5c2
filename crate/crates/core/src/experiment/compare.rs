//! Per-bin accuracy deltas between two suite directories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{FasaError, Result};
use crate::experiment::report::{parse_summary, Manifest, Statistic, SummaryRow};
use crate::harness::AugmentMode;

pub const COLUMNS: [&str; 4] = ["overall", "tail", "mid", "head"];

/// One metric of one mode pairing: median of A, median of B, `B - A` and how
/// many shared seeds moved up, down or not at all.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub mode_a: AugmentMode,
    pub mode_b: AugmentMode,
    pub metric: &'static str,
    pub median_a: Option<f64>,
    pub median_b: Option<f64>,
    pub delta: Option<f64>,
    pub seeds_up: usize,
    pub seeds_down: usize,
    pub seeds_equal: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::from("mode_a,mode_b,metric,median_a,median_b,delta,seeds_up,seeds_down,seeds_equal\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.mode_a.as_str(),
                r.mode_b.as_str(),
                r.metric,
                f(r.median_a),
                f(r.median_b),
                f(r.delta),
                r.seeds_up,
                r.seeds_down,
                r.seeds_equal
            );
        }
        s
    }
}

/// A parsed suite: bin thresholds plus summary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub group_thresholds: [usize; 2],
    pub rows: Vec<SummaryRow>,
}

impl SuiteSummary {
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| FasaError::io(p, e))
        };
        let manifest = Manifest::parse(&read("manifest.json")?)?;
        let rows = parse_summary(&read("summary.csv")?)?;
        Ok(Self {
            group_thresholds: manifest.group_thresholds,
            rows,
        })
    }

    fn modes(&self) -> Vec<AugmentMode> {
        let mut m: Vec<AugmentMode> = self.rows.iter().map(|r| r.mode).collect();
        m.sort();
        m.dedup();
        m
    }

    fn median(&self, mode: AugmentMode) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.mode == mode && r.statistic == Statistic::Median)
    }

    fn finals(&self, mode: AugmentMode) -> BTreeMap<u64, [Option<f64>; 4]> {
        self.rows
            .iter()
            .filter(|r| r.mode == mode && r.statistic == Statistic::Final)
            .filter_map(|r| r.seed.map(|s| (s, r.values)))
            .collect()
    }
}

/// Compares B against A. Modes present in both are paired with themselves;
/// if the two suites share no mode but each holds exactly one, those two
/// are paired.
pub fn compare(a: &SuiteSummary, b: &SuiteSummary) -> Result<Comparison> {
    if a.group_thresholds != b.group_thresholds {
        return Err(FasaError::ReportMismatch(format!(
            "bin thresholds differ: {:?} vs {:?}",
            a.group_thresholds, b.group_thresholds
        )));
    }
    let (ma, mb) = (a.modes(), b.modes());
    let shared: Vec<AugmentMode> = ma.iter().copied().filter(|m| mb.contains(m)).collect();
    let pairs: Vec<(AugmentMode, AugmentMode)> = if !shared.is_empty() {
        shared.into_iter().map(|m| (m, m)).collect()
    } else if ma.len() == 1 && mb.len() == 1 {
        vec![(ma[0], mb[0])]
    } else {
        return Err(FasaError::ReportMismatch("no modes to pair".into()));
    };

    let mut rows = Vec::new();
    for (mode_a, mode_b) in pairs {
        let med_a = a.median(mode_a).map(|r| r.values).unwrap_or([None; 4]);
        let med_b = b.median(mode_b).map(|r| r.values).unwrap_or([None; 4]);
        let (fa, fb) = (a.finals(mode_a), b.finals(mode_b));
        for (k, metric) in COLUMNS.iter().enumerate() {
            let (mut up, mut down, mut equal) = (0, 0, 0);
            for (seed, va) in &fa {
                if let (Some(x), Some(y)) = (va[k], fb.get(seed).and_then(|vb| vb[k])) {
                    match y.partial_cmp(&x) {
                        Some(std::cmp::Ordering::Greater) => up += 1,
                        Some(std::cmp::Ordering::Less) => down += 1,
                        _ => equal += 1,
                    }
                }
            }
            rows.push(ComparisonRow {
                mode_a,
                mode_b,
                metric,
                median_a: med_a[k],
                median_b: med_b[k],
                delta: med_a[k].zip(med_b[k]).map(|(x, y)| y - x),
                seeds_up: up,
                seeds_down: down,
                seeds_equal: equal,
            });
        }
    }
    Ok(Comparison { rows })
}

pub fn compare_dirs(a: &Path, b: &Path) -> Result<Comparison> {
    compare(&SuiteSummary::load(a)?, &SuiteSummary::load(b)?)
}
