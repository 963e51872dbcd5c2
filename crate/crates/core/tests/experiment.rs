use std::path::Path;

use fasa_core::experiment::{
    compare_dirs, parse_config, parse_summary, run_suite, ExperimentConfig, Manifest, Statistic, SuiteStatus,
};
use fasa_core::harness::AugmentMode;
use fasa_core::sampling::{AdaptationMode, InitMode, SignalKind};
use fasa_core::FasaError;
use proptest::prelude::*;

fn tiny(out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    };
    cfg.data.num_classes = 6;
    cfg.data.dim = 4;
    cfg.data.head_count = 80;
    cfg.data.imbalance_ratio = 10.0;
    cfg.data.val_per_class = 5;
    cfg.data.test_per_class = 5;
    cfg.training.epochs = 3;
    cfg
}

fn files_under(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn single_baseline_run_has_no_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny(tmp.path());
    cfg.modes = vec![AugmentMode::None];
    cfg.seeds = vec![3];
    let report = run_suite(&cfg, 1).unwrap();
    assert_eq!(report.runs.len(), 1);
    assert_eq!(
        files_under(tmp.path()),
        vec![
            "config.toml",
            "manifest.json",
            "none/seed-3/final.csv",
            "none/seed-3/metrics.csv",
            "none/seed-3/weight_norms.csv",
            "summary.csv",
        ]
    );
    let metrics = std::fs::read_to_string(tmp.path().join("none/seed-3/metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3);
    assert!(metrics.starts_with("epoch,overall_acc,tail_acc,mid_acc,head_acc,mean_val_loss\n"));
}

#[test]
fn five_seeds_two_modes_give_ten_runs_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny(tmp.path());
    let report = run_suite(&cfg, 4).unwrap();
    assert_eq!(report.runs.len(), 10);
    let files = files_under(tmp.path());
    let dirs: std::collections::BTreeSet<&str> = files
        .iter()
        .filter_map(|f| f.rsplit_once('/').map(|(d, _)| d))
        .collect();
    assert_eq!(dirs.len(), 10);
    for seed in 0..5 {
        let traj = std::fs::read_to_string(tmp.path().join(format!("fasa/seed-{seed}/trajectory.csv"))).unwrap();
        assert_eq!(traj.lines().count(), 1 + 3 * 6);
        assert!(!tmp.path().join(format!("none/seed-{seed}/trajectory.csv")).exists());
    }
    let summary = parse_summary(&std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap()).unwrap();
    for mode in [AugmentMode::None, AugmentMode::Fasa] {
        let finals = summary
            .iter()
            .filter(|r| r.mode == mode && r.statistic == Statistic::Final)
            .count();
        assert_eq!(finals, 5);
        assert!(summary
            .iter()
            .any(|r| r.mode == mode && r.statistic == Statistic::Median));
    }
    let manifest = Manifest::parse(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, SuiteStatus::Complete);
    assert_eq!(manifest.completed.len(), 10);

    // the saved config reproduces the suite
    let saved = parse_config(&std::fs::read_to_string(tmp.path().join("config.toml")).unwrap()).unwrap();
    assert_eq!(saved, cfg);

    let cmp = compare_dirs(tmp.path(), tmp.path()).unwrap();
    assert_eq!(cmp.rows.len(), 2 * 4);
    assert!(cmp.rows.iter().all(|r| r.delta.is_none_or(|d| d == 0.0)));
}

#[test]
fn failed_run_leaves_a_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = tiny(tmp.path());
    cfg.seeds = vec![0, 1];
    // a plain file where a run directory should go
    std::fs::create_dir_all(tmp.path().join("fasa")).unwrap();
    std::fs::write(tmp.path().join("fasa/seed-1"), "").unwrap();
    let err = run_suite(&cfg, 2).unwrap_err();
    assert!(
        matches!(&err, FasaError::RunFailed { mode, seed: 1, .. } if mode == "fasa"),
        "{err}"
    );
    let manifest = Manifest::parse(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.status, SuiteStatus::Failed);
    assert_eq!(manifest.completed.len(), 3);
    assert!(manifest.error.is_some());
    assert!(!tmp.path().join("summary.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = tiny(a.path());
    cfg.modes = vec![AugmentMode::None, AugmentMode::Fasa, AugmentMode::Smote];
    cfg.seeds = vec![0, 1];
    run_suite(&cfg, 3).unwrap();
    cfg.output_dir = b.path().to_path_buf();
    run_suite(&cfg, 1).unwrap();
    let files = files_under(a.path());
    assert_eq!(files, files_under(b.path()));
    for f in files.iter().filter(|f| *f != "config.toml") {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    let modes = prop::sample::subsequence(vec![AugmentMode::None, AugmentMode::Fasa, AugmentMode::Smote], 1..=3);
    let seeds = prop::collection::btree_set(0u64..1_000_000, 1..6);
    let data = (
        2usize..50,
        1usize..32,
        10usize..1000,
        1.0..200.0f64,
        0.1..10.0f64,
        0.1..3.0f64,
        1usize..50,
    );
    let training = (
        1usize..100,
        1usize..256,
        1e-4..1.0f64,
        0.0..1e-2f64,
        0.0..=1.0f64,
        0.01..=1.0f64,
    );
    let controller = (
        any::<bool>(),
        prop::option::of(0.1..10.0f64),
        1.01..2.0f64,
        0.1..0.99f64,
        prop::option::of(0.0..10.0f64),
        any::<bool>(),
        0.0001..0.5f64,
        (any::<bool>(), any::<bool>(), any::<bool>()),
    );
    (
        modes,
        seeds,
        data,
        training,
        controller,
        1usize..4,
        prop::option::of(1usize..200),
    )
        .prop_map(|(modes, seeds, d, t, c, vps, cap)| {
            let mut cfg = ExperimentConfig {
                modes,
                seeds: seeds.into_iter().collect(),
                ..ExperimentConfig::default()
            };
            (
                cfg.data.num_classes,
                cfg.data.dim,
                cfg.data.head_count,
                cfg.data.imbalance_ratio,
                cfg.data.center_radius,
                cfg.data.within_class_std,
                cfg.data.val_per_class,
            ) = d;
            (
                cfg.training.epochs,
                cfg.training.batch_size,
                cfg.training.learning_rate,
                cfg.training.weight_decay,
                cfg.training.lr_decay_at,
                cfg.training.lr_decay_factor,
            ) = t;
            let (adaptive, static_scale, alpha, beta, eps, rfs, threshold, (cw, acc, uni)) = c;
            cfg.controller.adaptive = adaptive;
            cfg.controller.static_scale = static_scale;
            cfg.controller.alpha = alpha;
            cfg.controller.beta = beta;
            cfg.controller.cluster_epsilon = eps;
            cfg.controller.validation_rfs = rfs;
            cfg.controller.rfs_threshold = threshold;
            if cw {
                cfg.controller.adaptation_mode = AdaptationMode::ClassWise;
            }
            if acc {
                cfg.controller.signal = SignalKind::ValidationAccuracy;
            }
            if uni {
                cfg.controller.init_mode = InitMode::Uniform;
            }
            cfg.augmentation.virt_per_success = vps;
            cfg.augmentation.max_virtual_per_iter = cap;
            cfg
        })
}

proptest! {
    #[test]
    fn configs_round_trip_through_toml(cfg in config_strategy()) {
        prop_assume!(cfg.validate().is_ok());
        let text = cfg.to_toml();
        prop_assert_eq!(parse_config(&text).unwrap(), cfg);
    }
}
