use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
version = 1
modes = ["none", "fasa"]
seeds = [1, 2]

[data]
num_classes = 6
dim = 4
head_count = 80
imbalance_ratio = 20.0
val_per_class = 8
test_per_class = 8
group_thresholds = [10, 50]

[training]
epochs = 3
batch_size = 32
"#;

fn fasa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fasa"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_prints_canonical_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "version = 1\n");
    let out = fasa().arg("validate").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alpha = 1.1"), "{text}");
    assert!(text.contains("beta = 0.9"), "{text}");
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "version = 1\n[controller]\nalpha = 0.5\n");
    let out = fasa().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("controller.alpha"));

    let out = fasa().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let ok = write_config(tmp.path(), SMALL);
    let out = fasa().args(["run", "--mode", "bogus"]).arg(&ok).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_failure_exits_with_two_and_leaves_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    // a regular file where one run directory should go
    let out_dir = tmp.path().join("out");
    std::fs::create_dir_all(out_dir.join("fasa")).unwrap();
    std::fs::write(out_dir.join("fasa/seed-2"), "x").unwrap();
    let out = fasa().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"status\": \"failed\""), "{manifest}");
    assert!(manifest.contains("none/seed-1"), "{manifest}");
    assert!(!out_dir.join("summary.csv").exists());

    // an output path that cannot be created at all
    let blocker = tmp.path().join("blocked");
    std::fs::write(&blocker, "x").unwrap();
    let out = fasa().arg("run").arg(&cfg).arg("--out").arg(&blocker).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_then_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = fasa()
        .arg("run")
        .arg(&cfg)
        .args(["--mode", "none", "--seeds", "1,2,3"])
        .arg("--out")
        .arg(&a)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = fasa()
        .arg("run")
        .arg(&cfg)
        .args(["--mode", "fasa", "--seeds", "1,2,3", "--jobs", "3"])
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(a.join("none/seed-3/metrics.csv").exists());
    assert!(!a.join("none/seed-3/trajectory.csv").exists());
    assert!(b.join("fasa/seed-1/trajectory.csv").exists());

    let out = fasa().arg("compare").arg(&a).arg(&b).output().unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "mode_a,mode_b,metric,median_a,median_b,delta,seeds_up,seeds_down,seeds_equal"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("none,fasa,overall,"));

    let out = fasa()
        .arg("compare")
        .arg(&a)
        .arg(tmp.path().join("missing"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
