//! Versioned TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{FasaError, Result};
use crate::harness::{AugmentMode, AugmentParams, ControllerParams, RunConfig, SyntheticDataSpec, TrainingParams};

pub const CONFIG_VERSION: u32 = 1;

fn default_modes() -> Vec<AugmentMode> {
    vec![AugmentMode::None, AugmentMode::Fasa]
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// A suite of seeded runs over one or more augmentation modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_modes")]
    pub modes: Vec<AugmentMode>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: SyntheticDataSpec,
    #[serde(default)]
    pub training: TrainingParams,
    #[serde(default)]
    pub augmentation: AugmentParams,
    #[serde(default)]
    pub controller: ControllerParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            modes: default_modes(),
            seeds: default_seeds(),
            output_dir: default_output_dir(),
            data: SyntheticDataSpec::default(),
            training: TrainingParams::default(),
            augmentation: AugmentParams::default(),
            controller: ControllerParams::default(),
        }
    }
}

fn in_section(section: &str, err: FasaError) -> FasaError {
    match err {
        FasaError::InvalidParameter { name, reason } => FasaError::Config {
            path: format!("{section}.{name}"),
            reason,
        },
        other => FasaError::Config {
            path: section.to_string(),
            reason: other.to_string(),
        },
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let config_err = |path: &str, reason: String| FasaError::Config {
            path: path.to_string(),
            reason,
        };
        if self.version != CONFIG_VERSION {
            return Err(config_err(
                "version",
                format!("unsupported version {} (expected {CONFIG_VERSION})", self.version),
            ));
        }
        if self.modes.is_empty() {
            return Err(config_err("modes", "at least one mode is required".into()));
        }
        let mut modes = self.modes.clone();
        modes.sort();
        modes.dedup();
        if modes.len() != self.modes.len() {
            return Err(config_err("modes", "duplicate mode".into()));
        }
        if self.seeds.is_empty() {
            return Err(config_err("seeds", "at least one seed is required".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(config_err("seeds", "duplicate seed".into()));
        }
        if let Some(s) = self.seeds.iter().find(|&&s| s > i64::MAX as u64) {
            return Err(config_err("seeds", format!("seed {s} exceeds {}", i64::MAX)));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(config_err("output_dir", "must not be empty".into()));
        }
        self.data.validate().map_err(|e| in_section("data", e))?;
        self.training.validate().map_err(|e| in_section("training", e))?;
        self.augmentation
            .validate(self.data.num_classes)
            .map_err(|e| in_section("augmentation", e))?;
        self.controller.validate().map_err(|e| in_section("controller", e))
    }

    pub fn run_config(&self, mode: AugmentMode, seed: u64) -> RunConfig {
        RunConfig {
            data: self.data.clone(),
            training: self.training.clone(),
            augmentation: self.augmentation.clone(),
            controller: self.controller.clone(),
            mode,
            seed,
        }
    }

    /// Canonical TOML form; parsing it yields an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}

/// Parses and validates a config from TOML text. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| FasaError::Config {
        path: String::new(),
        reason: e.to_string().trim_end().to_string(),
    })?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| FasaError::Config {
        path: e.path().to_string(),
        reason: e.inner().message().trim_end().to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| FasaError::io(path, e))?;
    parse_config(&text)
}
