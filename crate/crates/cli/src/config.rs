//! Experiment configuration: a TOML file resolved against defaults.
//!
//! The resolved form (every default filled in) is what gets echoed into the
//! output directory and hashed, so a run can be repeated from its echo.

use std::collections::BTreeMap;
use std::path::PathBuf;

use robustfeat::attack::{AttackConfig, Preset};
use robustfeat::train::ModelKind;
use robustfeat::Scalar;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainSpec,
    #[serde(default)]
    pub attack: AttackSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub theorem1: Theorem1Spec,
    #[serde(default)]
    pub groups: GroupSpec,
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/default")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            output_dir: default_output(),
            data: DataSpec::default(),
            model: ModelSpec::default(),
            train: TrainSpec::default(),
            attack: AttackSpec::default(),
            sweep: SweepSpec::default(),
            theorem1: Theorem1Spec::default(),
            groups: GroupSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSpec {
    /// `mnist` or `signs`.
    pub source: String,
    pub mnist_dir: PathBuf,
    /// Use only the first N training / test images.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub signs_per_class: usize,
    pub signs_size: usize,
    pub signs_max_noise: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        Self {
            source: "mnist".into(),
            mnist_dir: PathBuf::from("data/mnist"),
            train_limit: None,
            test_limit: None,
            signs_per_class: 40,
            signs_size: 32,
            signs_max_noise: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    pub kind: String,
    pub hidden: Vec<usize>,
    pub tau: f64,
    /// `f64` or `f32`.
    pub precision: String,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kind: "natural".into(),
            hidden: vec![256],
            tau: 0.5,
            precision: "f64".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSpec {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub checkpoint_every: usize,
    pub stop_at_adv_acc: Option<f64>,
    /// Inner attack for `mat` / `bat`.
    pub inner: AttackSpec,
    /// Attack used at checkpoints.
    pub eval: AttackSpec,
    /// Test images used at checkpoints.
    pub eval_limit: usize,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            iterations: 3750,
            batch_size: 32,
            learning_rate: 0.1,
            checkpoint_every: 0,
            stop_at_adv_acc: None,
            inner: AttackSpec {
                preset: Some("fast".into()),
                step: Some(0.05),
                iterations: Some(10),
                ..AttackSpec::default()
            },
            eval: AttackSpec::preset("training-eval"),
            eval_limit: 500,
        }
    }
}

/// A preset name with optional per-field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSpec {
    pub preset: Option<String>,
    pub epsilon: Option<f64>,
    pub step: Option<f64>,
    pub iterations: Option<usize>,
    pub restarts: Option<usize>,
    pub target: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self::preset("fast")
    }
}

impl AttackSpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.into()),
            epsilon: None,
            step: None,
            iterations: None,
            restarts: None,
            target: None,
            seed: None,
        }
    }

    /// Fills every field from the preset; `key` names the table in errors.
    fn resolve(&self, key: &str, master_seed: u64) -> Result<Self, CliError> {
        let name = self.preset.as_deref().unwrap_or("fast");
        let p = Preset::parse(name)
            .ok_or_else(|| CliError::Usage(format!("{key}.preset: unknown attack preset `{name}`")))?;
        let base: AttackConfig<f64> = p.config();
        let out = Self {
            preset: Some(name.into()),
            epsilon: Some(self.epsilon.unwrap_or(base.epsilon)),
            step: Some(self.step.unwrap_or(base.step)),
            iterations: Some(self.iterations.unwrap_or(base.iterations)),
            restarts: Some(self.restarts.unwrap_or(base.restarts)),
            target: self.target,
            seed: Some(self.seed.unwrap_or(master_seed)),
        };
        out.build::<f64>()
            .map_err(|e| CliError::Usage(format!("{key}: {e}")))?;
        Ok(out)
    }

    /// Attack settings of a resolved spec.
    pub fn build<T: Scalar>(&self) -> robustfeat::Result<AttackConfig<T>> {
        let mut cfg = AttackConfig::new(
            T::lit(self.epsilon.expect("resolved")),
            T::lit(self.step.expect("resolved")),
            self.iterations.expect("resolved"),
            self.restarts.expect("resolved"),
        )?
        .with_seed(self.seed.unwrap_or(0));
        cfg.target = self.target;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            epsilons: (0..=10).map(|i| i as f64 / 20.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Theorem1Spec {
    /// Random fixtures in addition to the fixed four-point fixture.
    pub fixtures: usize,
    pub points: usize,
    pub gap: f64,
    /// ε as a fraction of each fixture's separation.
    pub epsilon_fraction: f64,
    pub samples: usize,
    pub resolution: usize,
    /// `linf` or `l2`.
    pub metric: String,
}

impl Default for Theorem1Spec {
    fn default() -> Self {
        Self {
            fixtures: 20,
            points: 30,
            gap: 0.1,
            epsilon_fraction: 0.45,
            samples: 10_000,
            resolution: 200,
            metric: "linf".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GroupSpec {
    pub hue_red: f64,
    pub hue_yellow: f64,
    pub hue_blue: f64,
    /// Color → class names; empty uses the built-in sign grouping.
    pub map: BTreeMap<String, Vec<String>>,
}

impl Default for GroupSpec {
    fn default() -> Self {
        Self {
            hue_red: 0.0,
            hue_yellow: 60.0,
            hue_blue: 240.0,
            map: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    /// Checks references and fills attack presets.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if ModelKind::parse(&self.model.kind).is_none() {
            return Err(CliError::Usage(format!(
                "model.kind: unknown model kind `{}` (expected natural, bin, mat or bat)",
                self.model.kind
            )));
        }
        if !matches!(self.model.precision.as_str(), "f32" | "f64") {
            return Err(CliError::Usage(format!(
                "model.precision: expected `f32` or `f64`, got `{}`",
                self.model.precision
            )));
        }
        if !matches!(self.data.source.as_str(), "mnist" | "signs") {
            return Err(CliError::Usage(format!(
                "data.source: expected `mnist` or `signs`, got `{}`",
                self.data.source
            )));
        }
        if !matches!(self.theorem1.metric.as_str(), "linf" | "l2") {
            return Err(CliError::Usage(format!(
                "theorem1.metric: expected `linf` or `l2`, got `{}`",
                self.theorem1.metric
            )));
        }
        if !(self.model.tau > 0.0 && self.model.tau < 1.0) {
            return Err(CliError::Usage(format!("model.tau: {} is outside (0, 1)", self.model.tau)));
        }
        if self.train.iterations == 0 || self.train.batch_size == 0 {
            return Err(CliError::Usage("train: iterations and batch_size must be >= 1".into()));
        }
        let seed = self.seed;
        self.attack = self.attack.resolve("attack", seed)?;
        self.train.inner = self.train.inner.resolve("train.inner", seed)?;
        self.train.eval = self.train.eval.resolve("train.eval", seed)?;
        Ok(self)
    }

    pub fn kind(&self) -> ModelKind {
        ModelKind::parse(&self.model.kind).expect("resolved")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the resolved TOML, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}
